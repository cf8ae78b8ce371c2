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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kg2data {

// Base of every error the library throws. Subsystems derive their own kinds so
// callers can tell a bad input file from a transport failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : Error(what), line_(line), column_(column) {}
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// --- text helpers -----------------------------------------------------------

/// Whitespace-delimited tokens. This is the token unit used for chunking and
/// every context budget.
std::vector<std::string> whitespace_tokens(std::string_view text);
std::size_t whitespace_token_count(std::string_view text);

/// Keeps the first `budget` whitespace tokens of `text`, preserving the
/// original spacing between them. Trailing whitespace is dropped.
std::string truncate_tokens(std::string_view text, std::size_t budget);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string rtrim(std::string_view s);

/// Lowercases and replaces every non-alphanumeric ASCII byte with a space,
/// then collapses runs of spaces. Non-ASCII bytes pass through unchanged.
std::string normalize_phrase(std::string_view s);

/// Lowercased alphanumerics only ("Get_Daily-Precipitation" -> "getdailyprecipitation").
std::string squash_identifier(std::string_view s);

/// Crude suffix-stripping stemmer, enough for keyword intent matching.
std::string stem(std::string_view word);

bool starts_with(std::string_view s, std::string_view prefix);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// --- hashing ----------------------------------------------------------------

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
/// First eight bytes of SHA-256, big-endian.
std::uint64_t sha256_u64(std::string_view data);
std::uint64_t fnv1a64(std::string_view data);

// --- portable RNG -----------------------------------------------------------

/// SplitMix64. Output is fully specified, so sequences match across platforms
/// and standard libraries (unlike <random> distributions).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform();
    /// Uniform integer in [lo, hi].
    std::int64_t range(std::int64_t lo, std::int64_t hi);

private:
    std::uint64_t state_;
};

}  // namespace kg2data
