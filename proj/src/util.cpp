// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/error.hpp>
#include <chatbci/util.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace chatbci {

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed)
{
    auto h = seed;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed)
{
    return fnv1a(bytes.data(), bytes.size(), seed);
}

std::string to_hex(std::uint64_t value)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::string trim(std::string_view s)
{
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return std::string(s);
}

std::string lowercase(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix)
{
    if (s.size() < prefix.size())
        return false;
    return lowercase(s.substr(0, prefix.size())) == lowercase(prefix);
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(s.substr(start));
            break;
        }
        parts.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::set<std::string> word_set(std::string_view text)
{
    std::set<std::string> words;
    std::string current;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            words.insert(std::move(current));
            current.clear();
        }
    }
    if (!current.empty())
        words.insert(std::move(current));
    return words;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b)
{
    if (a.empty() && b.empty())
        return 0.0;
    std::size_t shared = 0;
    for (const auto& w : a)
        shared += b.count(w);
    const auto total = a.size() + b.size() - shared;
    return static_cast<double>(shared) / static_cast<double>(total);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IOError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IOError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out)
        throw IOError("short write to " + path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    write_file(tmp, contents);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IOError("cannot replace " + path.string() + ": " + ec.message());
}

void append_line(const std::filesystem::path& path, std::string_view line)
{
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out)
        throw IOError("cannot append to " + path.string());
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.put('\n');
    out.flush();
}

long long round_half_even(double x)
{
    return static_cast<long long>(std::nearbyint(x));
}

std::pair<std::string, std::string> split_url(std::string_view url)
{
    const auto scheme = url.find("://");
    const auto host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
    const auto slash = url.find('/', host_start);
    if (slash == std::string_view::npos)
        return {std::string(url), ""};
    auto path = std::string(url.substr(slash));
    while (!path.empty() && path.back() == '/')
        path.pop_back();
    return {std::string(url.substr(0, slash)), path};
}

} // namespace chatbci
