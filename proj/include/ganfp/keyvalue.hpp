#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ganfp/error.hpp"

namespace ganfp {

// Line-oriented "key = value" documents, optionally split into sections by
// `[name]` or `[[name]]` headers. `#` starts a comment outside quotes, values
// may be double-quoted. Keys before the first header belong to the root
// section. Repeated keys accumulate in order.

struct KeyValueSection {
    std::string name;  // empty for the root section
    std::size_t line = 0;
    std::vector<std::pair<std::string, std::string>> entries;

    std::vector<std::string> all(std::string_view key) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries)
            if (k == key) out.push_back(v);
        return out;
    }

    std::optional<std::string> get(std::string_view key) const {
        std::optional<std::string> out;
        for (const auto& [k, v] : entries)
            if (k == key) out = v;
        return out;
    }

    bool has(std::string_view key) const { return get(key).has_value(); }
};

struct KeyValueDocument {
    std::vector<KeyValueSection> sections;  // sections[0] is the root

    const KeyValueSection& root() const { return sections.front(); }

    std::vector<const KeyValueSection*> named(std::string_view name) const {
        std::vector<const KeyValueSection*> out;
        for (const auto& s : sections)
            if (s.name == name) out.push_back(&s);
        return out;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::string strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
    }
    return std::string(line);
}

inline std::string unquote(std::string_view v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) {
                ++i;
                out.push_back(v[i] == 'n' ? '\n' : v[i] == 't' ? '\t' : v[i]);
            } else {
                out.push_back(v[i]);
            }
        }
        return out;
    }
    return std::string(v);
}

}  // namespace detail

inline KeyValueDocument parse_key_values(std::string_view text, std::string_view origin = "<text>") {
    KeyValueDocument doc;
    doc.sections.push_back({});
    std::size_t line_no = 0;
    std::size_t pos = 0;
    auto error = [&](const std::string& what) {
        fail(ErrorCode::ParseError, std::string(origin) + ":" + std::to_string(line_no) + ": " + what);
    };
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        const std::string stripped = detail::strip_comment(text.substr(pos, end - pos));
        const std::string_view line = detail::trim(stripped);
        pos = end + 1;
        if (line.empty()) continue;
        if (line.front() == '[') {
            std::string_view inner = line;
            const bool array = inner.starts_with("[[") && inner.ends_with("]]");
            if (array) inner = inner.substr(2, inner.size() - 4);
            else if (inner.ends_with("]")) inner = inner.substr(1, inner.size() - 2);
            else error("unterminated section header");
            inner = detail::trim(inner);
            if (inner.empty()) error("empty section name");
            doc.sections.push_back({std::string(inner), line_no, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) error("expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        if (key.empty()) error("empty key");
        doc.sections.back().entries.emplace_back(std::string(key),
                                                 detail::unquote(detail::trim(line.substr(eq + 1))));
    }
    return doc;
}

inline KeyValueDocument load_key_values(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::MissingFile, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_key_values(ss.str(), path);
}

// Scalar conversions shared by every config reader.

inline double parse_real(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto* last = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), last, out);
    if (ec != std::errc{} || ptr != last)
        fail(ErrorCode::ParseError, "key '" + std::string(key) + "': not a number: '" + std::string(v) + "'");
    return out;
}

template <class Int = std::int64_t>
Int parse_integer(std::string_view key, std::string_view v) {
    Int out{};
    const auto* last = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), last, out);
    if (ec != std::errc{} || ptr != last)
        fail(ErrorCode::ParseError, "key '" + std::string(key) + "': not an integer: '" + std::string(v) + "'");
    return out;
}

inline std::vector<std::string> split_list(std::string_view v, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        auto end = v.find(sep, start);
        if (end == std::string_view::npos) end = v.size();
        const auto item = detail::trim(v.substr(start, end - start));
        if (!item.empty()) out.push_back(detail::unquote(item));
        start = end + 1;
    }
    return out;
}

/// Shortest decimal form that round-trips; used wherever output must be
/// byte-reproducible.
inline std::string format_real(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace ganfp
