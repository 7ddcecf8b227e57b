#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ganfp/digest.hpp"
#include "ganfp/error.hpp"
#include "ganfp/image.hpp"
#include "ganfp/keyvalue.hpp"
#include "ganfp/wavelet.hpp"

namespace ganfp {

enum class DenoiserKind { WaveletMMSE, GaussianSmooth };

inline std::string_view to_string(DenoiserKind k) {
    return k == DenoiserKind::WaveletMMSE ? "wavelet_mmse" : "gaussian_smooth";
}

/// Parameters of the content estimator f(X). Noise variance is in
/// intensity^2 units of the image's nominal range ([0, 255] by default).
struct DenoiserConfig {
    DenoiserKind kind = DenoiserKind::WaveletMMSE;
    int wavelet_levels = 4;
    double noise_variance = 9.0;
    double gaussian_sigma = 1.0;
    std::vector<int> shrink_window_sizes{3, 5, 7, 9};

    void validate() const {
        if (wavelet_levels < 1) fail(ErrorCode::InvalidConfig, "wavelet_levels must be >= 1");
        if (!(noise_variance > 0.0) || !std::isfinite(noise_variance))
            fail(ErrorCode::InvalidConfig, "noise_variance must be > 0");
        if (!(gaussian_sigma > 0.0) || !std::isfinite(gaussian_sigma))
            fail(ErrorCode::InvalidConfig, "gaussian_sigma must be > 0");
        if (shrink_window_sizes.empty()) fail(ErrorCode::InvalidConfig, "shrink_window_sizes is empty");
        for (int w : shrink_window_sizes)
            if (w < 3 || w % 2 == 0)
                fail(ErrorCode::InvalidConfig, "window sizes must be odd and >= 3, got " + std::to_string(w));
    }

    /// Canonical key=value form. Only keys that influence the selected
    /// denoiser are emitted, so the provenance hash ignores inert settings.
    std::string canonical() const {
        std::string out = "kind=" + std::string(to_string(kind)) + "\n";
        if (kind == DenoiserKind::WaveletMMSE) {
            out += "wavelet_levels=" + std::to_string(wavelet_levels) + "\n";
            out += "noise_variance=" + format_real(noise_variance) + "\n";
            out += "shrink_window_sizes=";
            for (std::size_t i = 0; i < shrink_window_sizes.size(); ++i)
                out += (i ? "," : "") + std::to_string(shrink_window_sizes[i]);
            out += "\n";
        } else {
            out += "gaussian_sigma=" + format_real(gaussian_sigma) + "\n";
        }
        return out;
    }

    Digest hash() const { return sha256(canonical()); }

    static DenoiserConfig from_section(const KeyValueSection& s) {
        DenoiserConfig cfg;
        for (const auto& [key, value] : s.entries) {
            if (key == "kind") {
                if (value == "wavelet_mmse") cfg.kind = DenoiserKind::WaveletMMSE;
                else if (value == "gaussian_smooth") cfg.kind = DenoiserKind::GaussianSmooth;
                else fail(ErrorCode::ParseError, "unknown denoiser kind '" + value + "'");
            } else if (key == "wavelet_levels") {
                cfg.wavelet_levels = parse_integer<int>(key, value);
            } else if (key == "noise_variance") {
                cfg.noise_variance = parse_real(key, value);
            } else if (key == "gaussian_sigma") {
                cfg.gaussian_sigma = parse_real(key, value);
            } else if (key == "shrink_window_sizes") {
                cfg.shrink_window_sizes.clear();
                for (const auto& item : split_list(value))
                    cfg.shrink_window_sizes.push_back(parse_integer<int>(key, item));
            } else {
                fail(ErrorCode::ParseError, "unknown denoiser key '" + key + "'");
            }
        }
        cfg.validate();
        return cfg;
    }

    static DenoiserConfig parse(std::string_view text) {
        return from_section(parse_key_values(text, "<denoiser config>").root());
    }

    static DenoiserConfig load(const std::string& path) { return from_section(load_key_values(path).root()); }

    bool operator==(const DenoiserConfig&) const = default;
};

/// Noise residual X - f(X), with provenance.
struct Residual {
    std::vector<ImagePlane> planes;
    std::string source_id;
    std::uint32_t source_index = 0;
    Digest denoiser_hash{};

    Shape shape() const { return shape_of(planes); }
};

namespace detail {

/// Local means of c^2 for several odd window sizes, mirrored at the borders.
/// Box sums grow one radius at a time (H_r = H_{r-1} + c^2[x-r] + c^2[x+r]),
/// so every window size sees the same summation order.
inline std::vector<Band> local_mean_squares(const Band& band, std::span<const int> windows) {
    int max_r = 0;
    for (int w : windows) max_r = std::max(max_r, w / 2);
    const std::size_t w = band.width, h = band.height, pad = static_cast<std::size_t>(max_r);
    const std::size_t pw = w + 2 * pad, ph = h + 2 * pad;
    std::vector<double> sq(pw * ph);
    for (std::size_t y = 0; y < ph; ++y) {
        const std::size_t sy = reflect(static_cast<std::ptrdiff_t>(y) - max_r, h);
        for (std::size_t x = 0; x < pw; ++x) {
            const double c = band(reflect(static_cast<std::ptrdiff_t>(x) - max_r, w), sy);
            sq[y * pw + x] = c * c;
        }
    }
    // rows[y * w + x]: horizontal sum over radius r around column x of padded row y
    std::vector<double> rows(ph * w);
    for (std::size_t y = 0; y < ph; ++y)
        for (std::size_t x = 0; x < w; ++x) rows[y * w + x] = sq[y * pw + x + pad];

    std::vector<Band> out(windows.size());
    for (int r = 0; r <= max_r; ++r) {
        if (r > 0)
            for (std::size_t y = 0; y < ph; ++y) {
                const double* s = sq.data() + y * pw + pad;
                double* row = rows.data() + y * w;
                for (std::size_t x = 0; x < w; ++x) row[x] += s[static_cast<std::ptrdiff_t>(x) - r] + s[x + static_cast<std::size_t>(r)];
            }
        for (std::size_t i = 0; i < windows.size(); ++i) {
            if (windows[i] / 2 != r) continue;
            Band b(w, h);
            const double area = static_cast<double>(windows[i]) * windows[i];
            for (std::size_t y = 0; y < h; ++y) {
                double* dst = b.data.data() + y * w;
                const double* centre = rows.data() + (y + pad) * w;
                for (std::size_t x = 0; x < w; ++x) dst[x] = centre[x];
                for (int d = 1; d <= r; ++d) {
                    const double* up = centre - static_cast<std::ptrdiff_t>(d * w);
                    const double* down = centre + d * w;
                    for (std::size_t x = 0; x < w; ++x) dst[x] += up[x] + down[x];
                }
                for (std::size_t x = 0; x < w; ++x) dst[x] = std::max(0.0, dst[x] / area);
            }
            out[i] = std::move(b);
        }
    }
    return out;
}

}  // namespace detail

/// Mean of c^2 over a window x window neighbourhood, mirrored at the borders.
inline Band local_mean_square(const Band& band, int window) {
    if (window < 1 || window % 2 == 0) fail(ErrorCode::InvalidConfig, "window size must be odd and >= 1");
    const int windows[] = {window};
    return std::move(detail::local_mean_squares(band, windows).front());
}

/// Locally adaptive Wiener shrinkage of one detail band.
///
/// Signal variance is min over windows of the local mean square minus the
/// noise variance, floored at zero; each coefficient is scaled by
/// s / (s + noise). The gain is evaluated as 1 - noise / m, which is the
/// same quantity and keeps the output monotone in the noise variance.
inline Band mmse_shrink(const Band& band, double noise_variance, std::span<const int> windows) {
    if (!(noise_variance > 0.0)) fail(ErrorCode::InvalidConfig, "noise_variance must be > 0");
    if (windows.empty()) fail(ErrorCode::InvalidConfig, "no shrink windows");
    for (int w : windows)
        if (w < 1 || w % 2 == 0) fail(ErrorCode::InvalidConfig, "window size must be odd and >= 1");
    auto means = detail::local_mean_squares(band, windows);
    Band min_ms = std::move(means.front());
    for (std::size_t i = 1; i < means.size(); ++i)
        for (std::size_t k = 0; k < min_ms.data.size(); ++k) min_ms.data[k] = std::min(min_ms.data[k], means[i].data[k]);
    Band out(band.width, band.height);
    for (std::size_t k = 0; k < band.data.size(); ++k) {
        const double m = min_ms.data[k];
        const double gain = m > noise_variance ? 1.0 - noise_variance / m : 0.0;
        out.data[k] = band.data[k] * gain;
    }
    return out;
}

inline std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Separable normalized Gaussian blur with mirrored borders.
inline ImagePlane gaussian_smooth(const ImagePlane& plane, double sigma) {
    if (!(sigma > 0.0)) fail(ErrorCode::InvalidConfig, "gaussian_sigma must be > 0");
    const auto kernel = gaussian_kernel(sigma);
    const auto r = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const std::size_t w = plane.width(), h = plane.height();
    std::vector<double> tmp(w * h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -r; i <= r; ++i)
                acc += kernel[i + r] * plane(detail::reflect(static_cast<std::ptrdiff_t>(x) + i, w), y);
            tmp[y * w + x] = acc;
        }
    ImagePlane out(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -r; i <= r; ++i)
                acc += kernel[i + r] * tmp[detail::reflect(static_cast<std::ptrdiff_t>(y) + i, h) * w + x];
            out(x, y) = static_cast<float>(acc);
        }
    return out;
}

inline ImagePlane denoise_plane(const ImagePlane& plane, const DenoiserConfig& cfg) {
    if (cfg.kind == DenoiserKind::GaussianSmooth) return gaussian_smooth(plane, cfg.gaussian_sigma);
    WaveletPyramid pyr = dwt2(plane, static_cast<std::size_t>(cfg.wavelet_levels));
    const double coefficient_noise = cfg.noise_variance * kPyramidNoiseScale;
    for (auto& lvl : pyr.details)
        for (Band* b : {&lvl.lh, &lvl.hl, &lvl.hh}) *b = mmse_shrink(*b, coefficient_noise, cfg.shrink_window_sizes);
    return idwt2(pyr);
}

/// Content estimate f(X), channels processed independently.
inline Image denoise(const Image& image, const DenoiserConfig& cfg) {
    cfg.validate();
    std::vector<ImagePlane> planes;
    for (const auto& p : image.planes()) planes.push_back(denoise_plane(p, cfg));
    return Image(std::move(planes), image.range());
}

inline Residual extract_residual(const Image& image, const DenoiserConfig& cfg, std::string source_id = {},
                                 std::uint32_t source_index = 0) {
    const Image smooth = denoise(image, cfg);
    Residual r;
    r.source_id = std::move(source_id);
    r.source_index = source_index;
    r.denoiser_hash = cfg.hash();
    for (std::size_t c = 0; c < image.channels(); ++c) {
        const auto x = image.plane(c).values();
        const auto f = smooth.plane(c).values();
        std::vector<float> data(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) data[i] = x[i] - f[i];
        r.planes.emplace_back(image.width(), image.height(), std::move(data));
    }
    return r;
}

}  // namespace ganfp
