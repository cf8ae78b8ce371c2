// Copyright 2026 The KG2data Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

namespace kg2data::kg {

struct Document {
    std::string id;
    std::string text;
};

struct Chunk {
    std::string id;
    std::string source_doc;
    std::string text;
    std::size_t token_count = 0;
    std::size_t span_start = 0;  // token offsets into the source, [start, end)
    std::size_t span_end = 0;
    bool operator==(const Chunk&) const = default;
};

/// Every UTF-8 `.txt` file in `dir`, sorted by file name; id = file stem.
std::vector<Document> load_corpus(const std::string& dir);

/// SHA-256 over the (id, text) pairs in id order.
std::string corpus_hash(const std::vector<Document>& docs);

/// Sliding window over whitespace tokens. Chunk text is the verbatim source
/// slice between the window's first and last token.
std::vector<Chunk> chunk_corpus(const std::vector<Document>& docs, std::size_t target_tokens, std::size_t overlap);

}  // namespace kg2data::kg
