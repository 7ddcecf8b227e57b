#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ganfp/denoise.hpp"
#include "ganfp/digest.hpp"
#include "ganfp/error.hpp"
#include "ganfp/image.hpp"
#include "ganfp/reduce.hpp"

namespace ganfp {

/// Per-source average of noise residuals.
struct Fingerprint {
    std::vector<ImagePlane> planes;
    std::uint32_t n_residuals = 0;
    std::string source_label;
    Digest denoiser_hash{};

    Shape shape() const { return shape_of(planes); }
};

/// Streaming element-wise mean over residuals.
///
/// Partial sums are kept like a binary counter: slot k holds the sum of a
/// block of 2^k consecutive residuals, and two equal blocks merge as
/// (older + newer). The reduction tree therefore depends only on the
/// number of residuals and their order, never on who produced them.
class FingerprintAccumulator {
public:
    void add(const Residual& r) {
        check_plane_stack(r.planes);
        if (count_ == 0) {
            shape_ = r.shape();
            hash_ = r.denoiser_hash;
        } else {
            if (r.shape() != shape_)
                fail(ErrorCode::ShapeMismatch, "residual shape " + to_string(r.shape()) + " differs from " +
                                                   to_string(shape_));
            if (r.denoiser_hash != hash_)
                fail(ErrorCode::MixedDenoisers, "residual '" + r.source_id + "' was produced by another denoiser");
        }
        std::vector<double> carry(shape_.count());
        std::size_t k = 0;
        for (const auto& p : r.planes)
            for (float v : p.values()) carry[k++] = v;
        for (std::size_t level = 0;; ++level) {
            if (level == slots_.size()) slots_.emplace_back();
            auto& slot = slots_[level];
            if (!slot) {
                slot = std::move(carry);
                break;
            }
            for (std::size_t i = 0; i < carry.size(); ++i) carry[i] = (*slot)[i] + carry[i];
            slot.reset();
        }
        ++count_;
    }

    std::size_t count() const noexcept { return count_; }
    Shape shape() const noexcept { return shape_; }

    Fingerprint mean(std::string label) const {
        if (count_ == 0) fail(ErrorCode::EmptyInput, "no residuals to average");
        std::vector<double> total;
        for (std::size_t level = slots_.size(); level-- > 0;) {
            if (!slots_[level]) continue;
            if (total.empty()) total = *slots_[level];
            else
                for (std::size_t i = 0; i < total.size(); ++i) total[i] += (*slots_[level])[i];
        }
        Fingerprint fp;
        fp.n_residuals = static_cast<std::uint32_t>(count_);
        fp.source_label = std::move(label);
        fp.denoiser_hash = hash_;
        const std::size_t n = shape_.width * shape_.height;
        const double inv = 1.0 / static_cast<double>(count_);
        for (std::size_t c = 0; c < shape_.channels; ++c) {
            std::vector<float> data(n);
            for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(total[c * n + i] * inv);
            fp.planes.emplace_back(shape_.width, shape_.height, std::move(data));
        }
        return fp;
    }

private:
    std::size_t count_ = 0;
    Shape shape_{};
    Digest hash_{};
    std::vector<std::optional<std::vector<double>>> slots_;
};

inline Fingerprint estimate_fingerprint(std::span<const Residual> residuals, std::string label) {
    if (residuals.empty()) fail(ErrorCode::EmptyInput, "fingerprint estimation needs at least one residual");
    FingerprintAccumulator acc;
    for (const auto& r : residuals) acc.add(r);
    return acc.mean(std::move(label));
}

/// Mean squared value over all samples of all planes.
inline double energy(std::span<const ImagePlane> planes) {
    std::size_t total = 0;
    for (const auto& p : planes) total += p.size();
    if (total == 0) return 0.0;
    double sum = 0.0;
    for (const auto& p : planes) {
        const auto v = p.values();
        sum += pairwise_sum(v.size(), [&](std::size_t i) { return double(v[i]) * v[i]; });
    }
    return sum / static_cast<double>(total);
}

inline double energy(const Fingerprint& fp) { return energy(fp.planes); }

struct EnergyPoint {
    std::size_t n = 0;
    double energy = 0.0;
};

struct EnergyCurve {
    std::vector<EnergyPoint> points;
};

/// Energy of the fingerprint estimated from the first N residuals, for each
/// N in `ns`. `residual_at(i)` is called once per index, in order.
inline EnergyCurve energy_progression(std::size_t available, const std::function<Residual(std::size_t)>& residual_at,
                                      std::span<const std::size_t> ns) {
    if (ns.empty()) fail(ErrorCode::InvalidConfig, "no N values requested");
    for (std::size_t i = 0; i < ns.size(); ++i)
        if (ns[i] < 1 || (i > 0 && ns[i] <= ns[i - 1]))
            fail(ErrorCode::InvalidConfig, "N values must be >= 1 and strictly increasing");
    if (ns.back() > available)
        fail(ErrorCode::NotEnoughResiduals, "requested N=" + std::to_string(ns.back()) + " but only " +
                                                std::to_string(available) + " residuals");
    EnergyCurve curve;
    FingerprintAccumulator acc;
    std::size_t next = 0;
    for (std::size_t i = 0; i < ns.back(); ++i) {
        acc.add(residual_at(i));
        if (acc.count() == ns[next]) {
            curve.points.push_back({ns[next], energy(acc.mean({}))});
            ++next;
        }
    }
    return curve;
}

inline EnergyCurve energy_progression(std::span<const Residual> residuals, std::span<const std::size_t> ns) {
    return energy_progression(
        residuals.size(), [&](std::size_t i) { return residuals[i]; }, ns);
}

enum class DecayModel {
    PaperExp,  // e_inf + e0 * 2^-N, decays below float precision by N ~ 64
    InverseN,  // e_inf + e0 / N, the law for averaging iid noise
};

inline std::string_view to_string(DecayModel m) { return m == DecayModel::PaperExp ? "paper_exp" : "inverse_n"; }

inline double decay_basis(DecayModel m, std::size_t n) {
    return m == DecayModel::PaperExp ? std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(n, 2000)))
                                     : 1.0 / static_cast<double>(n);
}

struct EnergyFit {
    double e_inf = 0.0;
    double e0 = 0.0;
    DecayModel model = DecayModel::InverseN;
    double rss = 0.0;

    double predict(std::size_t n) const { return e_inf + e0 * decay_basis(model, n); }
};

/// Least-squares fit of the decay model with e_inf >= 0.
///
/// e0 has a closed form for fixed e_inf, leaving a convex one-dimensional
/// profile in e_inf that is minimized by golden-section search.
inline EnergyFit fit_energy_curve(const EnergyCurve& curve, DecayModel model) {
    const auto& pts = curve.points;
    if (pts.size() < 3) fail(ErrorCode::TooFewPoints, "energy fit needs at least 3 points");
    std::vector<double> basis(pts.size());
    double basis_sq = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        basis[k] = decay_basis(model, pts[k].n);
        basis_sq += basis[k] * basis[k];
    }
    auto e0_for = [&](double e_inf) {
        if (basis_sq == 0.0) return 0.0;
        double num = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) num += (pts[k].energy - e_inf) * basis[k];
        return num / basis_sq;
    };
    auto rss_for = [&](double e_inf) {
        const double e0 = e0_for(e_inf);
        double s = 0.0;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const double r = pts[k].energy - e_inf - e0 * basis[k];
            s += r * r;
        }
        return s;
    };

    double hi = 0.0;
    for (const auto& p : pts) hi = std::max(hi, std::abs(p.energy));
    hi = std::max(hi, 1e-300);
    for (int i = 0; i < 64 && rss_for(2.0 * hi) < rss_for(hi); ++i) hi *= 2.0;
    hi *= 2.0;

    constexpr double kInvPhi = 0.6180339887498949;
    double a = 0.0, b = hi;
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = rss_for(c), fd = rss_for(d);
    for (int iter = 0; iter < 400 && (b - a) > 1e-13 * std::max(std::abs(a) + std::abs(b), 1e-300); ++iter) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = rss_for(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = rss_for(d);
        }
    }
    double e_inf = 0.5 * (a + b);
    if (rss_for(0.0) <= rss_for(e_inf)) e_inf = 0.0;
    return {e_inf, e0_for(e_inf), model, rss_for(e_inf)};
}

/// Normalized 2-D autocorrelation over lags [-max_lag, max_lag]^2.
struct AutocorrMap {
    int max_lag = 0;
    std::vector<double> values;  // row-major, dy outer, dx inner

    std::size_t side() const noexcept { return static_cast<std::size_t>(2 * max_lag + 1); }
    double operator()(int dx, int dy) const {
        return values[static_cast<std::size_t>(dy + max_lag) * side() + static_cast<std::size_t>(dx + max_lag)];
    }
};

/// Mean-removed, energy-normalized (biased) autocorrelation computed per
/// channel in the spatial domain and averaged over channels.
inline AutocorrMap autocorrelation(std::span<const ImagePlane> planes, int max_lag) {
    check_plane_stack(planes);
    const std::size_t w = planes.front().width(), h = planes.front().height();
    if (max_lag < 0 || 2 * static_cast<std::size_t>(max_lag) >= std::min(w, h))
        fail(ErrorCode::LagTooLarge, "max_lag " + std::to_string(max_lag) + " must be < min(width, height) / 2");
    AutocorrMap map;
    map.max_lag = max_lag;
    const std::size_t side = map.side();
    map.values.assign(side * side, 0.0);

    for (const auto& plane : planes) {
        const auto v = plane.values();
        if (std::all_of(v.begin(), v.end(), [&](float e) { return e == v.front(); }))
            fail(ErrorCode::ConstantInput, "autocorrelation of a constant plane");
        const double mean = mean_of(v);
        std::vector<double> f(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) f[i] = v[i] - mean;
        const double denom = pairwise_sum(f.size(), [&](std::size_t i) { return f[i] * f[i]; });

        // Half plane only; the other half follows from value(-d) == value(d).
        for (int dy = 0; dy <= max_lag; ++dy) {
            for (int dx = -max_lag; dx <= max_lag; ++dx) {
                if (dy == 0 && dx < 0) continue;
                const std::size_t x0 = dx < 0 ? static_cast<std::size_t>(-dx) : 0;
                const std::size_t x1 = dx < 0 ? w : w - static_cast<std::size_t>(dx);
                double sum = 0.0;
                for (std::size_t y = 0; y + static_cast<std::size_t>(dy) < h; ++y) {
                    const double* a = f.data() + y * w;
                    const double* b = f.data() + (y + static_cast<std::size_t>(dy)) * w;
                    double row = 0.0;
                    for (std::size_t x = x0; x < x1; ++x) row += a[x] * b[static_cast<std::ptrdiff_t>(x) + dx];
                    sum += row;
                }
                const double value = sum / denom / static_cast<double>(planes.size());
                map.values[static_cast<std::size_t>(dy + max_lag) * side + static_cast<std::size_t>(dx + max_lag)] +=
                    value;
                if (dy != 0 || dx != 0)
                    map.values[static_cast<std::size_t>(-dy + max_lag) * side +
                               static_cast<std::size_t>(-dx + max_lag)] += value;
            }
        }
    }
    return map;
}

inline AutocorrMap autocorrelation(const Fingerprint& fp, int max_lag) { return autocorrelation(fp.planes, max_lag); }

}  // namespace ganfp
