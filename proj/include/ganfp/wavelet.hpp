#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ganfp/error.hpp"
#include "ganfp/image.hpp"

namespace ganfp {

/// 8-tap Daubechies orthonormal scaling filter (four vanishing moments).
inline constexpr std::array<double, 8> kDaub8Lowpass = {
    0.23037781330885523,  0.71484657055254153, 0.63088076792959036,  -0.02798376941698385,
    -0.18703481171888114, 0.03084138183598697, 0.032883011666982945, -0.010597401784997278,
};

/// Quadrature mirror of the lowpass: g[n] = (-1)^n h[7 - n].
inline constexpr std::array<double, 8> kDaub8Highpass = [] {
    std::array<double, 8> g{};
    for (std::size_t n = 0; n < 8; ++n)
        g[n] = (n % 2 == 0 ? 1.0 : -1.0) * kDaub8Lowpass[7 - n];
    return g;
}();

/// Variance of a detail coefficient produced by dwt2 from unit-variance
/// white pixel noise (the 1/2 energy normalization squared).
inline constexpr double kPyramidNoiseScale = 0.25;

/// Coefficient plane of one subband.
struct Band {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> data;

    Band() = default;
    Band(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), data(w * h, fill) {}

    double operator()(std::size_t x, std::size_t y) const noexcept { return data[y * width + x]; }
    double& operator()(std::size_t x, std::size_t y) noexcept { return data[y * width + x]; }
    bool operator==(const Band&) const = default;
};

struct WaveletLevel {
    Band lh;  // lowpass along x, highpass along y
    Band hl;  // highpass along x, lowpass along y
    Band hh;
};

/// Multi-level decomposition of one plane.
///
/// The plane is mirror-extended (half-sample symmetric) to a period of
/// 2 * padded size and that period is transformed with the periodized
/// orthonormal filter bank, so the decomposition sees no wrap-around edges
/// and still reconstructs exactly. Coefficients carry a factor 1/2 so that
/// their total energy equals the plane's energy when the plane dimensions
/// are multiples of 2^(levels-1).
struct WaveletPyramid {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t ext_width = 0;
    std::size_t ext_height = 0;
    std::vector<WaveletLevel> details;  // details[0] is the finest level
    Band approximation;

    std::size_t levels() const noexcept { return details.size(); }

    std::vector<Band*> bands() {
        std::vector<Band*> out;
        for (auto& lvl : details) out.insert(out.end(), {&lvl.lh, &lvl.hl, &lvl.hh});
        out.push_back(&approximation);
        return out;
    }
    std::vector<const Band*> bands() const {
        std::vector<const Band*> out;
        for (const auto& lvl : details) out.insert(out.end(), {&lvl.lh, &lvl.hl, &lvl.hh});
        out.push_back(&approximation);
        return out;
    }

    /// All-zero pyramid with the layout dwt2 produces for a width x height plane.
    static WaveletPyramid zeros(std::size_t width, std::size_t height, std::size_t levels);
};

namespace detail {

inline std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

/// Half-sample symmetric reflection of any integer index into [0, n).
inline std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t j = i % period;
    if (j < 0) j += period;
    return j < static_cast<std::ptrdiff_t>(n) ? static_cast<std::size_t>(j)
                                              : static_cast<std::size_t>(period - 1 - j);
}

inline std::size_t extended_size(std::size_t n, std::size_t levels) {
    return 2 * round_up(n, std::size_t{1} << (levels - 1));
}

inline void check_levels(std::size_t width, std::size_t height, std::size_t levels) {
    if (levels < 1) fail(ErrorCode::InvalidConfig, "wavelet levels must be >= 1");
    if (levels >= 24) fail(ErrorCode::TooSmall, "too many wavelet levels");
    const std::size_t need = std::size_t{1} << levels;
    if (width < need || height < need)
        fail(ErrorCode::TooSmall, "plane " + std::to_string(width) + "x" + std::to_string(height) +
                                      " is smaller than 2^" + std::to_string(levels));
}

/// One analysis step on a periodic sequence of even length n.
/// `buf` holds n + 8 samples: the sequence followed by its periodic wrap.
inline void analyze(std::span<const double> buf, std::size_t n, double* lo, double* hi) {
    const auto& h = kDaub8Lowpass;
    const auto& g = kDaub8Highpass;
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double* x = buf.data() + 2 * k;
        double a = 0.0, d = 0.0;
        for (std::size_t t = 0; t < 8; ++t) {
            a += h[t] * x[t];
            d += g[t] * x[t];
        }
        lo[k] = a;
        hi[k] = d;
    }
}

/// Transpose of analyze: scatters into `acc` (n + 8 samples), folded by the caller.
inline void synthesize(const double* lo, const double* hi, std::size_t n, std::span<double> acc) {
    const auto& h = kDaub8Lowpass;
    const auto& g = kDaub8Highpass;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < n / 2; ++k) {
        double* x = acc.data() + 2 * k;
        for (std::size_t t = 0; t < 8; ++t) x[t] += h[t] * lo[k] + g[t] * hi[k];
    }
}

inline void fill_wrap(std::vector<double>& buf, std::size_t n) {
    for (std::size_t i = 0; i < 8; ++i) buf[n + i] = buf[i % n];
}

inline void fold_wrap(std::vector<double>& acc, std::size_t n) {
    for (std::size_t i = n; i < n + 8; ++i) acc[i % n] += acc[i];
}

/// In-place single-level 2-D analysis of the top-left w x h block of `plane`
/// (row stride `stride`). Output quadrants: [LL | HL] over [LH | HH].
inline void analyze_2d(std::vector<double>& plane, std::size_t stride, std::size_t w, std::size_t h) {
    std::vector<double> buf(std::max(w, h) + 8), lo(std::max(w, h) / 2), hi(std::max(w, h) / 2);
    for (std::size_t y = 0; y < h; ++y) {
        double* row = plane.data() + y * stride;
        std::copy(row, row + w, buf.begin());
        fill_wrap(buf, w);
        analyze(buf, w, lo.data(), hi.data());
        std::copy(lo.begin(), lo.begin() + w / 2, row);
        std::copy(hi.begin(), hi.begin() + w / 2, row + w / 2);
    }
    // Columns are filtered a whole row at a time to keep memory access contiguous.
    std::vector<double> cols(w * h);
    for (std::size_t k = 0; k < h / 2; ++k) {
        double* a = cols.data() + k * w;
        double* d = cols.data() + (k + h / 2) * w;
        for (std::size_t t = 0; t < 8; ++t) {
            const double* src = plane.data() + ((2 * k + t) % h) * stride;
            const double ht = kDaub8Lowpass[t], gt = kDaub8Highpass[t];
            for (std::size_t x = 0; x < w; ++x) {
                a[x] += ht * src[x];
                d[x] += gt * src[x];
            }
        }
    }
    for (std::size_t y = 0; y < h; ++y) std::copy_n(cols.data() + y * w, w, plane.data() + y * stride);
}

inline void synthesize_2d(std::vector<double>& plane, std::size_t stride, std::size_t w, std::size_t h) {
    std::vector<double> acc(std::max(w, h) + 8), lo(std::max(w, h) / 2), hi(std::max(w, h) / 2);
    std::vector<double> cols(w * h);
    for (std::size_t k = 0; k < h / 2; ++k) {
        const double* a = plane.data() + k * stride;
        const double* d = plane.data() + (k + h / 2) * stride;
        for (std::size_t t = 0; t < 8; ++t) {
            double* dst = cols.data() + ((2 * k + t) % h) * w;
            const double ht = kDaub8Lowpass[t], gt = kDaub8Highpass[t];
            for (std::size_t x = 0; x < w; ++x) dst[x] += ht * a[x] + gt * d[x];
        }
    }
    for (std::size_t y = 0; y < h; ++y) std::copy_n(cols.data() + y * w, w, plane.data() + y * stride);
    for (std::size_t y = 0; y < h; ++y) {
        double* row = plane.data() + y * stride;
        std::copy(row, row + w / 2, lo.begin());
        std::copy(row + w / 2, row + w, hi.begin());
        synthesize(lo.data(), hi.data(), w, std::span<double>(acc.data(), w + 8));
        fold_wrap(acc, w);
        std::copy(acc.begin(), acc.begin() + w, row);
    }
}

inline Band copy_block(const std::vector<double>& plane, std::size_t stride, std::size_t x0,
                       std::size_t y0, std::size_t w, std::size_t h) {
    Band b(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) b(x, y) = plane[(y0 + y) * stride + x0 + x];
    return b;
}

inline void paste_block(std::vector<double>& plane, std::size_t stride, std::size_t x0, std::size_t y0,
                        const Band& b) {
    for (std::size_t y = 0; y < b.height; ++y)
        for (std::size_t x = 0; x < b.width; ++x) plane[(y0 + y) * stride + x0 + x] = b(x, y);
}

}  // namespace detail

inline WaveletPyramid WaveletPyramid::zeros(std::size_t width, std::size_t height, std::size_t levels) {
    detail::check_levels(width, height, levels);
    WaveletPyramid p;
    p.width = width;
    p.height = height;
    p.ext_width = detail::extended_size(width, levels);
    p.ext_height = detail::extended_size(height, levels);
    std::size_t w = p.ext_width, h = p.ext_height;
    for (std::size_t l = 0; l < levels; ++l) {
        w /= 2;
        h /= 2;
        p.details.push_back({Band(w, h), Band(w, h), Band(w, h)});
    }
    p.approximation = Band(w, h);
    return p;
}

inline WaveletPyramid dwt2(const ImagePlane& plane, std::size_t levels) {
    WaveletPyramid pyr = WaveletPyramid::zeros(plane.width(), plane.height(), levels);
    const std::size_t ew = pyr.ext_width, eh = pyr.ext_height;
    const std::size_t pw = ew / 2, ph = eh / 2;

    std::vector<std::size_t> xmap(ew), ymap(eh);
    for (std::size_t x = 0; x < ew; ++x)
        xmap[x] = detail::reflect(static_cast<std::ptrdiff_t>(detail::reflect(static_cast<std::ptrdiff_t>(x), pw)),
                                  plane.width());
    for (std::size_t y = 0; y < eh; ++y)
        ymap[y] = detail::reflect(static_cast<std::ptrdiff_t>(detail::reflect(static_cast<std::ptrdiff_t>(y), ph)),
                                  plane.height());

    std::vector<double> work(ew * eh);
    for (std::size_t y = 0; y < eh; ++y)
        for (std::size_t x = 0; x < ew; ++x) work[y * ew + x] = 0.5 * plane(xmap[x], ymap[y]);

    std::size_t w = ew, h = eh;
    for (std::size_t l = 0; l < levels; ++l) {
        detail::analyze_2d(work, ew, w, h);
        w /= 2;
        h /= 2;
        auto& lvl = pyr.details[l];
        lvl.hl = detail::copy_block(work, ew, w, 0, w, h);
        lvl.lh = detail::copy_block(work, ew, 0, h, w, h);
        lvl.hh = detail::copy_block(work, ew, w, h, w, h);
    }
    pyr.approximation = detail::copy_block(work, ew, 0, 0, w, h);
    return pyr;
}

inline ImagePlane idwt2(const WaveletPyramid& pyr) {
    const std::size_t levels = pyr.levels();
    if (levels < 1 || levels >= 24 || pyr.width < 1 || pyr.height < 1)
        fail(ErrorCode::MalformedPyramid, "pyramid has no levels or empty source size");
    const std::size_t unit = std::size_t{1} << levels;
    if (pyr.width < unit || pyr.height < unit ||
        pyr.ext_width != detail::extended_size(pyr.width, levels) ||
        pyr.ext_height != detail::extended_size(pyr.height, levels))
        fail(ErrorCode::MalformedPyramid, "pyramid extent inconsistent with source size");

    const std::size_t ew = pyr.ext_width, eh = pyr.ext_height;
    auto check_band = [](const Band& b, std::size_t w, std::size_t h) {
        if (b.width != w || b.height != h || b.data.size() != w * h)
            fail(ErrorCode::MalformedPyramid, "band size mismatch");
    };
    std::vector<double> work(ew * eh);
    const std::size_t cw = ew >> levels, ch = eh >> levels;
    check_band(pyr.approximation, cw, ch);
    detail::paste_block(work, ew, 0, 0, pyr.approximation);
    for (std::size_t l = levels; l-- > 0;) {
        const std::size_t w = ew >> (l + 1), h = eh >> (l + 1);
        const auto& lvl = pyr.details[l];
        check_band(lvl.hl, w, h);
        check_band(lvl.lh, w, h);
        check_band(lvl.hh, w, h);
        detail::paste_block(work, ew, w, 0, lvl.hl);
        detail::paste_block(work, ew, 0, h, lvl.lh);
        detail::paste_block(work, ew, w, h, lvl.hh);
        detail::synthesize_2d(work, ew, 2 * w, 2 * h);
    }

    ImagePlane out(pyr.width, pyr.height);
    for (std::size_t y = 0; y < pyr.height; ++y)
        for (std::size_t x = 0; x < pyr.width; ++x) out(x, y) = static_cast<float>(2.0 * work[y * ew + x]);
    return out;
}

}  // namespace ganfp
