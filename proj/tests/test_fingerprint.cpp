#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ganfp/fingerprint.hpp"
#include "oracles.hpp"

using namespace ganfp;

namespace {

Residual make_residual(std::size_t w, std::size_t h, std::vector<std::vector<float>> planes, Digest hash = {}) {
    Residual r;
    for (auto& p : planes) r.planes.emplace_back(w, h, std::move(p));
    r.denoiser_hash = hash;
    return r;
}

Residual noise_residual(std::size_t w, std::size_t h, std::size_t ch, double sd, std::mt19937_64& rng) {
    std::normal_distribution<float> d(0.0f, static_cast<float>(sd));
    Residual r;
    for (std::size_t c = 0; c < ch; ++c) {
        ImagePlane p(w, h);
        for (auto& v : p.values()) v = d(rng);
        r.planes.push_back(std::move(p));
    }
    return r;
}

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

EnergyCurve exact_curve(DecayModel m, double e_inf, double e0, std::vector<std::size_t> ns) {
    EnergyCurve c;
    for (auto n : ns) c.points.push_back({n, e_inf + e0 * decay_basis(m, n)});
    return c;
}

}  // namespace

TEST(EstimateFingerprint, SingleResidualUnchanged) {
    std::mt19937_64 rng(1);
    const auto r = noise_residual(9, 7, 3, 2.0, rng);
    const auto fp = estimate_fingerprint(std::vector{r}, "A");
    EXPECT_EQ(fp.planes, r.planes);
    EXPECT_EQ(fp.n_residuals, 1u);
    EXPECT_EQ(fp.source_label, "A");
}

TEST(EstimateFingerprint, ArithmeticMean) {
    const std::vector rs{make_residual(2, 1, {{1, 3}}), make_residual(2, 1, {{3, 1}})};
    const auto fp = estimate_fingerprint(rs, "A");
    EXPECT_EQ(fp.planes.front().values()[0], 2.0f);
    EXPECT_EQ(fp.planes.front().values()[1], 2.0f);
    EXPECT_EQ(fp.n_residuals, 2u);
}

TEST(EstimateFingerprint, MatchesNaiveMean) {
    std::mt19937_64 rng(2);
    std::vector<Residual> rs;
    for (int i = 0; i < 77; ++i) rs.push_back(noise_residual(16, 8, 3, 5.0, rng));
    const auto fp = estimate_fingerprint(rs, "A");
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < 128; ++i) {
            long double s = 0;
            for (const auto& r : rs) s += r.planes[c].values()[i];
            EXPECT_NEAR(fp.planes[c].values()[i], static_cast<double>(s / rs.size()), 1e-6);
        }
}

TEST(EstimateFingerprint, Errors) {
    EXPECT_EQ(code_of([] { estimate_fingerprint(std::vector<Residual>{}, "A"); }), ErrorCode::EmptyInput);
    const std::vector shapes{make_residual(2, 1, {{1, 3}}), make_residual(1, 2, {{3, 1}})};
    EXPECT_EQ(code_of([&] { estimate_fingerprint(shapes, "A"); }), ErrorCode::ShapeMismatch);
    Digest other{};
    other[0] = 1;
    const std::vector mixed{make_residual(2, 1, {{1, 3}}), make_residual(2, 1, {{3, 1}}, other)};
    EXPECT_EQ(code_of([&] { estimate_fingerprint(mixed, "A"); }), ErrorCode::MixedDenoisers);
}

TEST(EstimateFingerprint, LinearInResiduals) {
    std::mt19937_64 rng(3);
    std::vector<Residual> rs, scaled;
    for (int i = 0; i < 40; ++i) {
        rs.push_back(noise_residual(12, 12, 1, 3.0, rng));
        scaled.push_back(rs.back());
        for (auto& v : scaled.back().planes[0].values()) v *= 3.0f;
    }
    const auto a = estimate_fingerprint(rs, "A"), b = estimate_fingerprint(scaled, "A");
    for (std::size_t i = 0; i < 144; ++i)
        EXPECT_NEAR(b.planes[0].values()[i], 3.0f * a.planes[0].values()[i], 1e-6 * (1 + std::abs(b.planes[0].values()[i])));
}

TEST(Energy, Examples) {
    EXPECT_EQ(energy(std::vector{ImagePlane(4, 4, 0.0f)}), 0.0);
    EXPECT_EQ(energy(std::vector{ImagePlane(4, 3, 2.0f), ImagePlane(4, 3, 2.0f), ImagePlane(4, 3, 2.0f)}), 4.0);
}

TEST(Energy, AveragedNoiseFollowsVarianceOverN) {
    std::mt19937_64 rng(4);
    const double sigma = 3.0;
    for (std::size_t n : {32u, 128u}) {
        std::vector<Residual> rs;
        for (std::size_t i = 0; i < n; ++i) rs.push_back(noise_residual(64, 64, 1, sigma, rng));
        const double e = energy(estimate_fingerprint(rs, "noise"));
        EXPECT_NEAR(e, sigma * sigma / n, 0.2 * sigma * sigma / n);
    }
}

TEST(EnergyProgression, ZeroAndConstantResiduals) {
    std::vector<Residual> zeros(8, make_residual(3, 3, {std::vector<float>(9, 0.0f)}));
    const std::size_t ns[] = {1, 2, 8};
    for (const auto& p : energy_progression(zeros, ns).points) EXPECT_EQ(p.energy, 0.0);

    std::mt19937_64 rng(5);
    const auto f = noise_residual(16, 16, 3, 2.0, rng);
    const std::vector<Residual> same(33, f);
    const double ef = energy(f.planes);
    const std::size_t ns2[] = {1, 3, 7, 32, 33};
    const auto curve = energy_progression(same, ns2);
    ASSERT_EQ(curve.points.size(), 5u);
    for (const auto& p : curve.points) EXPECT_NEAR(p.energy, ef, 1e-12 * ef);
}

TEST(EnergyProgression, PureNoiseDecaysAsOneOverN) {
    std::mt19937_64 rng(6);
    std::vector<Residual> rs;
    for (int i = 0; i < 512; ++i) rs.push_back(noise_residual(64, 64, 1, 3.0, rng));
    const std::size_t ns[] = {8, 32, 128, 512};
    const auto curve = energy_progression(rs, ns);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : curve.points) {
        const double x = std::log(static_cast<double>(p.n)), y = std::log(p.energy);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double k = static_cast<double>(curve.points.size());
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    EXPECT_NEAR(slope, -1.0, 0.2);
}

TEST(EnergyProgression, PrefixDeterministic) {
    std::mt19937_64 rng(7);
    std::vector<Residual> rs;
    for (int i = 0; i < 64; ++i) rs.push_back(noise_residual(32, 32, 3, 3.0, rng));
    const std::size_t ns[] = {2, 8, 32, 64};
    const auto a = energy_progression(rs, ns), b = energy_progression(rs, ns);
    for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].energy, b.points[i].energy);
    // The N=8 point is exactly the energy of the first-8 average.
    EXPECT_EQ(a.points[1].energy, energy(estimate_fingerprint(std::span(rs).first(8), "")));
}

TEST(EnergyProgression, Errors) {
    std::vector<Residual> rs(4, make_residual(1, 1, {{1.0f}}));
    const std::size_t too_many[] = {2, 5};
    EXPECT_EQ(code_of([&] { energy_progression(rs, too_many); }), ErrorCode::NotEnoughResiduals);
    const std::size_t unordered[] = {3, 2};
    EXPECT_EQ(code_of([&] { energy_progression(rs, unordered); }), ErrorCode::InvalidConfig);
}

TEST(FitEnergyCurve, RecoversExactInverseN) {
    const auto fit = fit_energy_curve(exact_curve(DecayModel::InverseN, 0.01, 1.0, {2, 8, 32, 128, 512}),
                                      DecayModel::InverseN);
    EXPECT_NEAR(fit.e_inf, 0.01, 1e-6);
    EXPECT_NEAR(fit.e0, 1.0, 1e-6);
    EXPECT_LT(fit.rss, 1e-12);
}

TEST(FitEnergyCurve, RecoversExactPaperExp) {
    const auto fit =
        fit_energy_curve(exact_curve(DecayModel::PaperExp, 0.04, 0.5, {1, 2, 3, 4, 6}), DecayModel::PaperExp);
    EXPECT_NEAR(fit.e_inf, 0.04, 1e-6);
    EXPECT_NEAR(fit.e0, 0.5, 1e-6);
    EXPECT_LT(fit.rss, 1e-12);
}

TEST(FitEnergyCurve, ConstantCurve) {
    for (auto m : {DecayModel::InverseN, DecayModel::PaperExp}) {
        const auto fit = fit_energy_curve(exact_curve(m, 0.25, 0.0, {2, 8, 32, 128, 512}), m);
        EXPECT_NEAR(fit.e_inf, 0.25, 1e-9);
        EXPECT_NEAR(fit.e0, 0.0, 1e-9);
    }
}

TEST(FitEnergyCurve, MatchesUnconstrainedLeastSquaresWhenInterior) {
    // Noisy data whose unconstrained optimum has e_inf > 0: the fit must agree
    // with the 2x2 normal equations.
    EnergyCurve c;
    const double noise[] = {0.003, -0.002, 0.001, -0.0005, 0.0002};
    const std::size_t ns[] = {2, 8, 32, 128, 512};
    for (int i = 0; i < 5; ++i) c.points.push_back({ns[i], 0.05 + 2.0 / ns[i] + noise[i]});
    const auto fit = fit_energy_curve(c, DecayModel::InverseN);
    long double s1 = 0, sb = 0, sbb = 0, sy = 0, sby = 0;
    for (const auto& p : c.points) {
        const long double b = 1.0L / p.n;
        s1 += 1, sb += b, sbb += b * b, sy += p.energy, sby += b * p.energy;
    }
    const long double det = s1 * sbb - sb * sb;
    const double e_inf = static_cast<double>((sbb * sy - sb * sby) / det);
    const double e0 = static_cast<double>((s1 * sby - sb * sy) / det);
    ASSERT_GT(e_inf, 0.0);
    EXPECT_NEAR(fit.e_inf, e_inf, 1e-9);
    EXPECT_NEAR(fit.e0, e0, 1e-9);
}

TEST(FitEnergyCurve, EInfConstrainedNonNegative) {
    const auto fit = fit_energy_curve(exact_curve(DecayModel::InverseN, -0.5, 4.0, {2, 8, 32}), DecayModel::InverseN);
    EXPECT_EQ(fit.e_inf, 0.0);
    EXPECT_GE(fit.e0, 0.0);
}

TEST(FitEnergyCurve, TooFewPoints) {
    EXPECT_EQ(code_of([] { fit_energy_curve(exact_curve(DecayModel::InverseN, 0, 1, {2, 8}), DecayModel::InverseN); }),
              ErrorCode::TooFewPoints);
}

TEST(FitEnergyCurve, PureNoiseProgressionHasNoFloor) {
    std::mt19937_64 rng(8);
    std::vector<Residual> rs;
    for (int i = 0; i < 512; ++i) rs.push_back(noise_residual(48, 48, 1, 3.0, rng));
    const std::size_t ns[] = {2, 8, 32, 128, 512};
    const auto curve = energy_progression(rs, ns);
    const auto fit = fit_energy_curve(curve, DecayModel::InverseN);
    EXPECT_LT(fit.e_inf, 0.05 * curve.points.front().energy);
}

TEST(Autocorrelation, WhiteNoiseIsFlat) {
    std::mt19937_64 rng(9);
    const auto r = noise_residual(128, 128, 1, 1.0, rng);
    const auto map = autocorrelation(r.planes, 16);
    const double bound = 3.0 / std::sqrt(128.0 * 128.0);
    int outside = 0, total = 0;
    for (int dy = -16; dy <= 16; ++dy)
        for (int dx = -16; dx <= 16; ++dx) {
            if (dx == 0 && dy == 0) continue;
            ++total;
            if (std::abs(map(dx, dy)) >= bound) ++outside;
        }
    EXPECT_LE(outside, total / 100);
}

TEST(Autocorrelation, SinusoidPeaksAtPeriod) {
    const int p = 16;
    ImagePlane plane(256, 256);
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x)
            plane(x, y) = static_cast<float>(std::cos(2 * M_PI * x / p) + std::cos(2 * M_PI * y / p));
    const auto map = autocorrelation(std::vector{plane}, 40);
    for (auto [dx, dy] : {std::pair{p, 0}, {0, p}, {-p, 0}, {0, -p}}) EXPECT_GT(map(dx, dy), 0.9);
    // Biased normalization: a peak at (dx, dy) is (1 - |dx|/W)(1 - |dy|/W).
    for (auto [dx, dy] : {std::pair{p, p}, {2 * p, 0}, {-p, p}, {2 * p, 2 * p}}) {
        EXPECT_NEAR(map(dx, dy), (1 - std::abs(dx) / 256.0) * (1 - std::abs(dy) / 256.0), 0.01);
        EXPECT_GT(map(dx, dy), map(dx + 1, dy));
        EXPECT_GT(map(dx, dy), map(dx - 1, dy));
    }
    EXPECT_LT(map(p / 2, 0), 0.1);
}

TEST(Autocorrelation, MatchesDefinitionAndSymmetry) {
    std::mt19937_64 rng(10);
    auto r = noise_residual(40, 30, 3, 2.0, rng);
    for (std::size_t c = 0; c < 3; ++c)  // add some structure
        for (std::size_t y = 0; y < 30; ++y)
            for (std::size_t x = 0; x < 40; ++x) r.planes[c](x, y) += static_cast<float>(std::sin(0.7 * x + c));
    const auto map = autocorrelation(r.planes, 7);
    EXPECT_NEAR(map(0, 0), 1.0, 1e-6);
    for (int dy = -7; dy <= 7; ++dy)
        for (int dx = -7; dx <= 7; ++dx) {
            EXPECT_NEAR(map(dx, dy), oracle::autocorr(r.planes, dx, dy), 1e-9);
            EXPECT_NEAR(map(dx, dy), map(-dx, -dy), 1e-6);
            EXPECT_LE(std::abs(map(dx, dy)), 1.0 + 1e-6);
        }
}

TEST(Autocorrelation, Errors) {
    std::mt19937_64 rng(11);
    const auto r = noise_residual(20, 20, 1, 1.0, rng);
    EXPECT_EQ(code_of([&] { autocorrelation(r.planes, 10); }), ErrorCode::LagTooLarge);
    EXPECT_NO_THROW(autocorrelation(r.planes, 9));
    EXPECT_EQ(code_of([] { autocorrelation(std::vector{ImagePlane(20, 20, 1.0f)}, 3); }), ErrorCode::ConstantInput);
}
