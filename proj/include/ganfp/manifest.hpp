#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ganfp/error.hpp"
#include "ganfp/keyvalue.hpp"

namespace ganfp {

// Dataset manifest, key=value format:
//
//   n_estimation = 512          # images per source used for the fingerprint
//
//   [[source]]
//   label = "A"                 # [A-Za-z0-9_.-]+, unique
//   directory = "images/A"      # every .png/.jpg/.jpeg inside, sorted by name
//   image = "extra/a1.png"      # explicit images, repeatable, appended in order
//   sibling_group = "g1"        # optional annotation for block-structure stats
//
// Relative paths resolve against the manifest's directory. The first
// n_estimation images of each source estimate its fingerprint, the rest
// are the test split.

struct ManifestSource {
    std::string label;
    std::vector<std::string> image_paths;
    std::string sibling_group;
};

struct DatasetManifest {
    std::vector<ManifestSource> sources;
    std::size_t n_estimation = 512;

    std::size_t test_count(std::size_t source) const { return sources[source].image_paths.size() - n_estimation; }

    std::vector<std::string> estimation_paths(std::size_t source) const {
        const auto& p = sources[source].image_paths;
        return {p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n_estimation)};
    }

    std::vector<std::string> test_paths(std::size_t source) const {
        const auto& p = sources[source].image_paths;
        return {p.begin() + static_cast<std::ptrdiff_t>(n_estimation), p.end()};
    }

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        for (const auto& s : sources) out.push_back(s.label);
        return out;
    }
};

inline bool valid_label(std::string_view label) {
    if (label.empty() || label == "." || label == "..") return false;
    return std::all_of(label.begin(), label.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.';
    });
}

inline bool is_image_file(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

/// Checks labels, existence of every image and the split size.
inline void validate_manifest(const DatasetManifest& m) {
    if (m.sources.empty()) fail(ErrorCode::ParseError, "manifest lists no sources");
    if (m.n_estimation < 1) fail(ErrorCode::ParseError, "n_estimation must be >= 1");
    for (std::size_t i = 0; i < m.sources.size(); ++i) {
        const auto& s = m.sources[i];
        if (!valid_label(s.label)) fail(ErrorCode::ParseError, "invalid source label '" + s.label + "'");
        for (std::size_t j = 0; j < i; ++j)
            if (m.sources[j].label == s.label) fail(ErrorCode::DuplicateLabel, "source label '" + s.label + "' repeats");
        for (const auto& p : s.image_paths)
            if (!std::filesystem::is_regular_file(p)) fail(ErrorCode::MissingFile, "image not found: " + p);
        if (s.image_paths.size() < m.n_estimation + 1)
            fail(ErrorCode::TooFewImages, "source '" + s.label + "' has " + std::to_string(s.image_paths.size()) +
                                              " images; needs at least n_estimation + 1 = " +
                                              std::to_string(m.n_estimation + 1));
    }
}

inline DatasetManifest parse_manifest(const KeyValueDocument& doc, const std::filesystem::path& base_dir) {
    DatasetManifest m;
    for (const auto& [key, value] : doc.root().entries) {
        if (key == "n_estimation") m.n_estimation = parse_integer<std::size_t>(key, value);
        else fail(ErrorCode::ParseError, "unknown manifest key '" + key + "'");
    }
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return (path.is_absolute() ? path : base_dir / path).lexically_normal().string();
    };
    for (const auto& section : doc.sections) {
        if (section.name.empty()) continue;
        if (section.name != "source") fail(ErrorCode::ParseError, "unknown manifest section [" + section.name + "]");
        ManifestSource src;
        for (const auto& [key, value] : section.entries) {
            if (key == "label") {
                src.label = value;
            } else if (key == "sibling_group") {
                src.sibling_group = value;
            } else if (key == "image") {
                src.image_paths.push_back(resolve(value));
            } else if (key == "directory") {
                const auto dir = resolve(value);
                if (!std::filesystem::is_directory(dir)) fail(ErrorCode::MissingFile, "directory not found: " + dir);
                std::vector<std::string> found;
                for (const auto& e : std::filesystem::directory_iterator(dir))
                    if (e.is_regular_file() && is_image_file(e.path())) found.push_back(e.path().string());
                std::sort(found.begin(), found.end());
                src.image_paths.insert(src.image_paths.end(), found.begin(), found.end());
            } else {
                fail(ErrorCode::ParseError, "unknown source key '" + key + "' at line " + std::to_string(section.line));
            }
        }
        if (src.label.empty()) fail(ErrorCode::ParseError, "source at line " + std::to_string(section.line) + " has no label");
        m.sources.push_back(std::move(src));
    }
    validate_manifest(m);
    return m;
}

inline DatasetManifest load_manifest(const std::string& path) {
    const auto doc = load_key_values(path);
    return parse_manifest(doc, std::filesystem::path(path).parent_path());
}

}  // namespace ganfp
