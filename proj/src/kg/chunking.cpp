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

#include "kg2data/kg/chunking.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>

#include "kg2data/common.hpp"

namespace kg2data::kg {

namespace fs = std::filesystem;

std::vector<Document> load_corpus(const std::string& dir) {
    if (!fs::is_directory(dir)) throw Error("corpus directory not found: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Document> docs;
    docs.reserve(files.size());
    for (const auto& f : files) docs.push_back({f.stem().string(), read_file(f.string())});
    return docs;
}

std::string corpus_hash(const std::vector<Document>& docs) {
    std::vector<const Document*> sorted;
    for (const auto& d : docs) sorted.push_back(&d);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });
    std::string material;
    for (const auto* d : sorted) {
        material += d->id;
        material.push_back('\0');
        material += d->text;
        material.push_back('\0');
    }
    return sha256_hex(material);
}

std::vector<Chunk> chunk_corpus(const std::vector<Document>& docs, std::size_t target_tokens, std::size_t overlap) {
    if (target_tokens == 0 || overlap >= target_tokens) {
        throw ConfigError("chunking needs target_tokens > overlap >= 0 (target " + std::to_string(target_tokens) +
                          ", overlap " + std::to_string(overlap) + ")");
    }
    const std::size_t stride = target_tokens - overlap;
    std::vector<Chunk> chunks;
    for (const auto& doc : docs) {
        // Byte extents of every token.
        std::vector<std::pair<std::size_t, std::size_t>> extents;
        const auto& t = doc.text;
        std::size_t i = 0;
        while (i < t.size()) {
            while (i < t.size() && std::isspace(static_cast<unsigned char>(t[i]))) ++i;
            std::size_t b = i;
            while (i < t.size() && !std::isspace(static_cast<unsigned char>(t[i]))) ++i;
            if (i > b) extents.emplace_back(b, i);
        }
        const std::size_t total = extents.size();
        std::size_t index = 0;
        for (std::size_t start = 0;; start += stride, ++index) {
            std::size_t end = std::min(start + target_tokens, total);
            Chunk c;
            c.id = doc.id + "#" + std::to_string(index);
            c.source_doc = doc.id;
            c.span_start = start;
            c.span_end = end;
            c.token_count = end - start;
            if (end > start) c.text = t.substr(extents[start].first, extents[end - 1].second - extents[start].first);
            chunks.push_back(std::move(c));
            if (end >= total) break;
        }
    }
    return chunks;
}

}  // namespace kg2data::kg
