#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ganfp/error.hpp"
#include "ganfp/image.hpp"
#include "ganfp/keyvalue.hpp"
#include "ganfp/random.hpp"
#include "ganfp/reduce.hpp"

namespace ganfp {

// Synthetic sources following X_i = clip(content_i + F + W_i): a fixed
// pattern F, Gaussian noise W_i drawn independently per image, and varying
// scene content. All randomness derives from the spec seeds via xoshiro256**.

enum class ContentKind { Flat, SmoothGradient, PerlinTexture };

inline std::string_view to_string(ContentKind k) {
    switch (k) {
        case ContentKind::Flat: return "flat";
        case ContentKind::SmoothGradient: return "smooth_gradient";
        case ContentKind::PerlinTexture: return "perlin_texture";
    }
    return "flat";
}

inline ContentKind parse_content_kind(std::string_view s) {
    if (s == "flat") return ContentKind::Flat;
    if (s == "smooth_gradient") return ContentKind::SmoothGradient;
    if (s == "perlin_texture") return ContentKind::PerlinTexture;
    fail(ErrorCode::ParseError, "unknown content kind '" + std::string(s) + "'");
}

/// Pattern shared by a group of sibling sources, added on top of each
/// source's own pattern.
struct SharedComponent {
    std::string group;
    double amplitude = 1.0;
    std::uint64_t seed = 0;

    bool operator==(const SharedComponent&) const = default;
};

struct SynthSourceSpec {
    std::string label = "synth";
    std::size_t width = 256;
    std::size_t height = 256;
    std::size_t channels = 3;
    double fingerprint_amplitude = 2.0;
    double noise_std = 6.0;
    ContentKind content = ContentKind::Flat;
    std::optional<SharedComponent> shared;
    std::uint64_t seed = 1;

    void validate() const {
        if (label.empty()) fail(ErrorCode::InvalidConfig, "source label is empty");
        if (width < 1 || height < 1) fail(ErrorCode::InvalidConfig, "image dimensions must be >= 1");
        if (channels != 1 && channels != 3) fail(ErrorCode::InvalidConfig, "channels must be 1 or 3");
        if (!(fingerprint_amplitude >= 0.0) || !std::isfinite(fingerprint_amplitude))
            fail(ErrorCode::InvalidConfig, "fingerprint_amplitude must be >= 0");
        if (!(noise_std > 0.0) || !std::isfinite(noise_std)) fail(ErrorCode::InvalidConfig, "noise_std must be > 0");
        if (shared && (!(shared->amplitude >= 0.0) || !std::isfinite(shared->amplitude)))
            fail(ErrorCode::InvalidConfig, "shared amplitude must be >= 0");
    }

    /// key=value form, readable back by `parse_synth_specs`.
    std::string canonical() const {
        std::string out;
        out += "label = \"" + label + "\"\n";
        out += "width = " + std::to_string(width) + "\n";
        out += "height = " + std::to_string(height) + "\n";
        out += "channels = " + std::to_string(channels) + "\n";
        out += "fingerprint_amplitude = " + format_real(fingerprint_amplitude) + "\n";
        out += "noise_std = " + format_real(noise_std) + "\n";
        out += "content = " + std::string(to_string(content)) + "\n";
        out += "seed = " + std::to_string(seed) + "\n";
        if (shared) {
            out += "shared_group = \"" + shared->group + "\"\n";
            out += "shared_amplitude = " + format_real(shared->amplitude) + "\n";
            out += "shared_seed = " + std::to_string(shared->seed) + "\n";
        }
        return out;
    }

    bool operator==(const SynthSourceSpec&) const = default;
};

namespace detail {

inline constexpr std::uint64_t kPatternStream = 0x50415454;  // "PATT"
inline constexpr std::uint64_t kImageStream = 0x494D4147;    // "IMAG"
inline constexpr double kEchoShare = 0.75;

inline void normalize_plane(std::vector<double>& v, double amplitude) {
    const double mean = mean_of(std::span<const double>(v));
    for (double& e : v) e -= mean;
    const double sd = std::sqrt(pairwise_sum(v.size(), [&](std::size_t i) { return v[i] * v[i]; }) /
                                static_cast<double>(v.size()));
    const double scale = sd > 0.0 ? amplitude / sd : 0.0;
    for (double& e : v) e *= scale;
}

}  // namespace detail

/// Period (pixels) of the quasi-periodic part of the pattern for `seed`.
inline std::size_t pattern_period(std::uint64_t seed) {
    Xoshiro256 rng(mix_seed(seed, detail::kPatternStream));
    return 8 + static_cast<std::size_t>(rng.below(25));
}

/// Fixed pattern F per channel: white noise blended with an echo grid
/// q(x, y) = (u(x, y) + u(x+p, y) + u(x, y+p) + u(x+p, y+p)) / 2 of a second
/// white field u. The echo grid repeats structure at lag p in both axes
/// without being strictly periodic, so patterns from different seeds stay
/// nearly orthogonal. Each channel is rescaled to zero mean and standard
/// deviation `amplitude`.
inline std::vector<ImagePlane> make_fingerprint_pattern(std::size_t width, std::size_t height, std::size_t channels,
                                                        double amplitude, std::uint64_t seed) {
    if (!(amplitude >= 0.0)) fail(ErrorCode::InvalidConfig, "pattern amplitude must be >= 0");
    if (width < 1 || height < 1 || channels < 1) fail(ErrorCode::InvalidConfig, "pattern dimensions must be >= 1");
    const std::size_t p = pattern_period(seed);
    Xoshiro256 rng(mix_seed(seed, detail::kPatternStream));
    rng.below(25);
    const double a = std::sqrt(1.0 - detail::kEchoShare), b = std::sqrt(detail::kEchoShare);
    const std::size_t n = width * height, uw = width + p, uh = height + p;

    std::vector<ImagePlane> planes;
    for (std::size_t c = 0; c < channels; ++c) {
        std::vector<double> white(n), u(uw * uh), f(n);
        for (double& e : white) e = rng.normal();
        for (double& e : u) e = rng.normal();
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                const double q = 0.5 * (u[y * uw + x] + u[y * uw + x + p] + u[(y + p) * uw + x] + u[(y + p) * uw + x + p]);
                f[y * width + x] = a * white[y * width + x] + b * q;
            }
        detail::normalize_plane(f, amplitude);
        std::vector<float> data(n);
        for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(f[i]);
        planes.emplace_back(width, height, std::move(data));
    }
    return planes;
}

/// Own pattern plus the sibling-group component, if any.
inline std::vector<ImagePlane> true_fingerprint(const SynthSourceSpec& spec) {
    spec.validate();
    auto planes = make_fingerprint_pattern(spec.width, spec.height, spec.channels, spec.fingerprint_amplitude, spec.seed);
    if (spec.shared) {
        const auto extra =
            make_fingerprint_pattern(spec.width, spec.height, spec.channels, spec.shared->amplitude, spec.shared->seed);
        for (std::size_t c = 0; c < planes.size(); ++c) {
            auto dst = planes[c].values();
            const auto src = extra[c].values();
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
    }
    return planes;
}

namespace detail {

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

/// Gradient noise on a square lattice with `cell` pixel spacing, in [-1, 1].
inline std::vector<double> perlin_field(std::size_t width, std::size_t height, double cell, Xoshiro256& rng) {
    const std::size_t gw = static_cast<std::size_t>(std::ceil(static_cast<double>(width) / cell)) + 2;
    const std::size_t gh = static_cast<std::size_t>(std::ceil(static_cast<double>(height) / cell)) + 2;
    std::vector<double> gx(gw * gh), gy(gw * gh);
    for (std::size_t i = 0; i < gw * gh; ++i) {
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        gx[i] = std::cos(theta);
        gy[i] = std::sin(theta);
    }
    const double ox = rng.uniform(), oy = rng.uniform();
    std::vector<double> out(width * height);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const double fx = static_cast<double>(x) / cell + ox, fy = static_cast<double>(y) / cell + oy;
            const auto ix = static_cast<std::size_t>(fx), iy = static_cast<std::size_t>(fy);
            const double tx = fx - static_cast<double>(ix), ty = fy - static_cast<double>(iy);
            auto dot = [&](std::size_t cx, std::size_t cy, double dx, double dy) {
                const std::size_t k = cy * gw + cx;
                return gx[k] * dx + gy[k] * dy;
            };
            const double n00 = dot(ix, iy, tx, ty), n10 = dot(ix + 1, iy, tx - 1.0, ty);
            const double n01 = dot(ix, iy + 1, tx, ty - 1.0), n11 = dot(ix + 1, iy + 1, tx - 1.0, ty - 1.0);
            const double u = fade(tx), v = fade(ty);
            const double top = n00 + u * (n10 - n00), bottom = n01 + u * (n11 - n01);
            out[y * width + x] = std::sqrt(2.0) * (top + v * (bottom - top));
        }
    return out;
}

/// Scene content for one image; levels stay well inside [0, 255].
inline std::vector<std::vector<double>> make_content(const SynthSourceSpec& spec, Xoshiro256& rng) {
    const std::size_t w = spec.width, h = spec.height, n = w * h;
    std::vector<std::vector<double>> out(spec.channels, std::vector<double>(n));
    switch (spec.content) {
        case ContentKind::Flat:
            for (auto& plane : out) std::fill(plane.begin(), plane.end(), 64.0 + 128.0 * rng.uniform());
            break;
        case ContentKind::SmoothGradient: {
            const double theta = 2.0 * std::numbers::pi * rng.uniform();
            const double cx = static_cast<double>(w - 1) / 2.0, cy = static_cast<double>(h - 1) / 2.0;
            const double extent = static_cast<double>(std::max(w, h));
            for (auto& plane : out) {
                const double base = 96.0 + 64.0 * rng.uniform();
                const double span = 100.0 * (2.0 * rng.uniform() - 1.0);
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t x = 0; x < w; ++x) {
                        const double t = ((static_cast<double>(x) - cx) * std::cos(theta) +
                                          (static_cast<double>(y) - cy) * std::sin(theta)) / extent;
                        plane[y * w + x] = base + span * t;
                    }
            }
            break;
        }
        case ContentKind::PerlinTexture: {
            const auto coarse = perlin_field(w, h, 32.0, rng);
            const auto fine = perlin_field(w, h, 16.0, rng);
            for (auto& plane : out) {
                const double base = 96.0 + 64.0 * rng.uniform();
                const double gain = 0.8 + 0.4 * rng.uniform();
                for (std::size_t i = 0; i < n; ++i) plane[i] = base + gain * (30.0 * coarse[i] + 15.0 * fine[i]);
            }
            break;
        }
    }
    return out;
}

}  // namespace detail

/// Image `index` of the source: clip(content + pattern + W), W ~ N(0, noise_std^2).
/// `pattern` must be `true_fingerprint(spec)`.
inline Image generate_image(const SynthSourceSpec& spec, std::span<const ImagePlane> pattern, std::uint64_t index) {
    spec.validate();
    if (shape_of(pattern) != Shape{spec.width, spec.height, spec.channels})
        fail(ErrorCode::ShapeMismatch, "pattern shape does not match the spec");
    Xoshiro256 rng(mix_seed(mix_seed(spec.seed, detail::kImageStream), index));
    const auto content = detail::make_content(spec, rng);
    const ValueRange range{};
    std::vector<ImagePlane> planes;
    for (std::size_t c = 0; c < spec.channels; ++c) {
        const auto f = pattern[c].values();
        std::vector<float> data(f.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double v = content[c][i] + static_cast<double>(f[i]) + spec.noise_std * rng.normal();
            data[i] = static_cast<float>(std::clamp(v, range.lo, range.hi));
        }
        planes.emplace_back(spec.width, spec.height, std::move(data));
    }
    return Image(std::move(planes), range);
}

struct SynthDataset {
    SynthSourceSpec spec;
    std::vector<ImagePlane> true_fingerprint;
    std::vector<Image> images;
};

inline SynthDataset generate_dataset(const SynthSourceSpec& spec, std::size_t count) {
    if (count < 1) fail(ErrorCode::InvalidConfig, "count must be >= 1");
    SynthDataset ds{spec, true_fingerprint(spec), {}};
    ds.images.reserve(count);
    for (std::size_t i = 0; i < count; ++i) ds.images.push_back(generate_image(spec, ds.true_fingerprint, i));
    return ds;
}

// Spec files. Keys in the root section are defaults for every source; each
// `[source]` section describes one source. `[group]` sections (label, seed,
// amplitude) define sibling components that sources join with
// `shared_group = <label>`. Without any `[source]` section the root section
// is itself the single source.

namespace detail {

inline void apply_spec_key(SynthSourceSpec& s, const std::string& key, const std::string& value) {
    if (key == "label") s.label = value;
    else if (key == "width") s.width = parse_integer<std::size_t>(key, value);
    else if (key == "height") s.height = parse_integer<std::size_t>(key, value);
    else if (key == "channels") s.channels = parse_integer<std::size_t>(key, value);
    else if (key == "fingerprint_amplitude") s.fingerprint_amplitude = parse_real(key, value);
    else if (key == "noise_std") s.noise_std = parse_real(key, value);
    else if (key == "content") s.content = parse_content_kind(value);
    else if (key == "seed") s.seed = parse_integer<std::uint64_t>(key, value);
    else if (key == "shared_group") {
        if (!s.shared) s.shared.emplace();
        s.shared->group = value;
    } else if (key == "shared_amplitude") {
        if (!s.shared) s.shared.emplace();
        s.shared->amplitude = parse_real(key, value);
    } else if (key == "shared_seed") {
        if (!s.shared) s.shared.emplace();
        s.shared->seed = parse_integer<std::uint64_t>(key, value);
    } else {
        fail(ErrorCode::ParseError, "unknown synth key '" + key + "'");
    }
}

}  // namespace detail

inline std::vector<SynthSourceSpec> parse_synth_specs(const KeyValueDocument& doc) {
    std::vector<SharedComponent> groups;
    for (const auto* g : doc.named("group")) {
        SharedComponent sc;
        bool have_seed = false;
        for (const auto& [key, value] : g->entries) {
            if (key == "label") sc.group = value;
            else if (key == "seed") sc.seed = parse_integer<std::uint64_t>(key, value), have_seed = true;
            else if (key == "amplitude") sc.amplitude = parse_real(key, value);
            else fail(ErrorCode::ParseError, "unknown group key '" + key + "'");
        }
        if (sc.group.empty() || !have_seed)
            fail(ErrorCode::ParseError, "group section at line " + std::to_string(g->line) + " needs label and seed");
        for (const auto& other : groups)
            if (other.group == sc.group) fail(ErrorCode::DuplicateLabel, "group '" + sc.group + "' defined twice");
        groups.push_back(sc);
    }
    for (const auto& s : doc.sections)
        if (!s.name.empty() && s.name != "group" && s.name != "source")
            fail(ErrorCode::ParseError, "unknown section [" + s.name + "]");

    auto build = [&](const KeyValueSection* extra) {
        SynthSourceSpec spec;
        for (const auto& [k, v] : doc.root().entries) detail::apply_spec_key(spec, k, v);
        if (extra)
            for (const auto& [k, v] : extra->entries) detail::apply_spec_key(spec, k, v);
        if (spec.shared) {
            const bool explicit_seed = (extra && extra->has("shared_seed")) || doc.root().has("shared_seed");
            const bool explicit_amp = (extra && extra->has("shared_amplitude")) || doc.root().has("shared_amplitude");
            const auto it = std::find_if(groups.begin(), groups.end(),
                                         [&](const auto& g) { return g.group == spec.shared->group; });
            if (it != groups.end()) {
                if (!explicit_seed) spec.shared->seed = it->seed;
                if (!explicit_amp) spec.shared->amplitude = it->amplitude;
            } else if (!explicit_seed) {
                fail(ErrorCode::ParseError, "source '" + spec.label + "' joins unknown group '" +
                                                spec.shared->group + "'");
            }
        }
        spec.validate();
        return spec;
    };

    std::vector<SynthSourceSpec> out;
    const auto sources = doc.named("source");
    if (sources.empty()) out.push_back(build(nullptr));
    for (const auto* s : sources) out.push_back(build(s));
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (out[i].label == out[j].label) fail(ErrorCode::DuplicateLabel, "source label '" + out[i].label + "' repeats");
    return out;
}

inline std::vector<SynthSourceSpec> parse_synth_specs(std::string_view text) {
    return parse_synth_specs(parse_key_values(text, "<synth spec>"));
}

inline std::vector<SynthSourceSpec> load_synth_specs(const std::string& path) {
    return parse_synth_specs(load_key_values(path));
}

}  // namespace ganfp
