// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chatbci {

/// 64-bit FNV-1a. Stable across platforms; used for mock-provider keys and
/// data fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t value);

std::string trim(std::string_view s);
std::string lowercase(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
std::vector<std::string> split(std::string_view s, char sep);

/// Case-folded maximal runs of ASCII alphanumerics.
std::set<std::string> word_set(std::string_view text);

/// |A ∩ B| / |A ∪ B|; two empty sets score 0.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);
/// Write to a sibling temp file then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void append_line(const std::filesystem::path& path, std::string_view line);

/// Splits "scheme://host[:port]/path" into origin and path (path may be empty).
std::pair<std::string, std::string> split_url(std::string_view url);

/// Round half to even, the tie rule used for stratified split sizes.
long long round_half_even(double x);

} // namespace chatbci
