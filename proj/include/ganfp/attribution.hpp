#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ganfp/denoise.hpp"
#include "ganfp/error.hpp"
#include "ganfp/fingerprint.hpp"
#include "ganfp/image.hpp"
#include "ganfp/reduce.hpp"

namespace ganfp {

/// Correlation index: inner product of the zero-mean unit-norm versions.
inline double corr(const FlatVector& x, const FlatVector& y) {
    if (x.size() != y.size())
        fail(ErrorCode::LengthMismatch, "corr of vectors with lengths " + std::to_string(x.size()) + " and " +
                                            std::to_string(y.size()));
    return inner_product(zero_mean_unit_norm(x), zero_mean_unit_norm(y));
}

enum class CorrMode {
    FullStack,       // one correlation over the concatenated channels
    PerChannelMean,  // correlate each channel separately, average the results
};

inline std::string_view to_string(CorrMode m) { return m == CorrMode::FullStack ? "full_stack" : "per_channel_mean"; }

inline CorrMode parse_corr_mode(std::string_view s) {
    if (s == "full_stack") return CorrMode::FullStack;
    if (s == "per_channel_mean") return CorrMode::PerChannelMean;
    fail(ErrorCode::ParseError, "unknown correlation mode '" + std::string(s) + "'");
}

/// A plane stack pre-normalized for repeated correlation.
class NormalizedPattern {
public:
    NormalizedPattern() = default;

    NormalizedPattern(std::span<const ImagePlane> planes, CorrMode mode) : shape_(shape_of(planes)) {
        check_plane_stack(planes);
        if (mode == CorrMode::FullStack) {
            parts_.push_back(zero_mean_unit_norm(flatten(planes)));
        } else {
            for (std::size_t c = 0; c < planes.size(); ++c) parts_.push_back(zero_mean_unit_norm(flatten(planes.subspan(c, 1))));
        }
    }

    Shape shape() const noexcept { return shape_; }

    double corr(const NormalizedPattern& other) const {
        if (other.shape_ != shape_ || other.parts_.size() != parts_.size())
            fail(ErrorCode::ShapeMismatch, "cannot correlate " + to_string(shape_) + " with " + to_string(other.shape_));
        double sum = 0.0;
        for (std::size_t i = 0; i < parts_.size(); ++i) sum += inner_product(parts_[i], other.parts_[i]);
        return sum / static_cast<double>(parts_.size());
    }

private:
    Shape shape_{};
    std::vector<FlatVector> parts_;
};

inline double corr(std::span<const ImagePlane> x, std::span<const ImagePlane> y, CorrMode mode = CorrMode::FullStack) {
    if (shape_of(x) != shape_of(y))
        fail(ErrorCode::ShapeMismatch, "cannot correlate " + to_string(shape_of(x)) + " with " + to_string(shape_of(y)));
    return NormalizedPattern(x, mode).corr(NormalizedPattern(y, mode));
}

struct CorrScore {
    double value = 0.0;
    std::string residual_id;
    std::string fingerprint_label;
};

inline std::vector<CorrScore> score_against(std::span<const Residual> residuals, const Fingerprint& fp,
                                            CorrMode mode = CorrMode::FullStack) {
    const NormalizedPattern f(fp.planes, mode);
    std::vector<CorrScore> out;
    out.reserve(residuals.size());
    for (const auto& r : residuals) {
        if (r.shape() != fp.shape())
            fail(ErrorCode::ShapeMismatch, "residual '" + r.source_id + "' has shape " + to_string(r.shape()) +
                                               ", fingerprint '" + fp.source_label + "' has " + to_string(fp.shape()));
        out.push_back({NormalizedPattern(r.planes, mode).corr(f), r.source_id, fp.source_label});
    }
    return out;
}

/// Fingerprints normalized once, scored against many residuals.
class FingerprintBank {
public:
    FingerprintBank(std::span<const Fingerprint> fps, CorrMode mode = CorrMode::FullStack) : mode_(mode) {
        if (fps.empty()) fail(ErrorCode::EmptyFingerprintList, "no fingerprints");
        for (const auto& fp : fps) {
            if (fp.shape() != fps.front().shape())
                fail(ErrorCode::ShapeMismatch, "fingerprints differ in shape");
            labels_.push_back(fp.source_label);
            patterns_.emplace_back(fp.planes, mode);
        }
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    Shape shape() const noexcept { return patterns_.front().shape(); }

    std::vector<double> scores(std::span<const ImagePlane> residual) const {
        if (shape_of(residual) != shape())
            fail(ErrorCode::ShapeMismatch, "residual shape " + to_string(shape_of(residual)) +
                                               " does not match fingerprints " + to_string(shape()));
        const NormalizedPattern r(residual, mode_);
        std::vector<double> out;
        for (const auto& p : patterns_) out.push_back(r.corr(p));
        return out;
    }

private:
    CorrMode mode_;
    std::vector<std::string> labels_;
    std::vector<NormalizedPattern> patterns_;
};

struct Attribution {
    std::string label;
    std::size_t index = 0;
    std::vector<CorrScore> scores;
    bool tie = false;  // another fingerprint reached the same maximum
};

/// Maximum-correlation decision over a score row. For zero-mean unit-norm
/// vectors |x - y|^2 = 2 - 2 corr(x, y), so this is the minimum-distance rule.
/// Ties resolve to the first index and are flagged.
inline std::pair<std::size_t, bool> argmax_with_tie(std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    bool tie = false;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (i != best && scores[i] == scores[best]) tie = true;
    return {best, tie};
}

inline Attribution attribute(const Residual& residual, std::span<const Fingerprint> fps,
                             CorrMode mode = CorrMode::FullStack) {
    if (fps.empty()) fail(ErrorCode::EmptyFingerprintList, "no fingerprints to attribute against");
    const FingerprintBank bank(fps, mode);
    const auto values = bank.scores(residual.planes);
    const auto [best, tie] = argmax_with_tie(values);
    Attribution a{fps[best].source_label, best, {}, tie};
    for (std::size_t i = 0; i < values.size(); ++i) a.scores.push_back({values[i], residual.source_id, fps[i].source_label});
    return a;
}

/// Mean correlation of every residual set with every fingerprint.
struct CorrMatrix {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<double>> values;
};

struct LabeledResiduals {
    std::string label;
    std::vector<Residual> residuals;
};

/// Row means of per-residual score rows (each row holds one score per column).
inline CorrMatrix correlation_matrix_from_scores(std::span<const std::string> row_labels,
                                                 std::span<const std::string> col_labels,
                                                 std::span<const std::vector<std::vector<double>>> score_sets) {
    if (row_labels.size() != score_sets.size()) fail(ErrorCode::LengthMismatch, "one label per score set expected");
    CorrMatrix m;
    m.col_labels.assign(col_labels.begin(), col_labels.end());
    for (std::size_t s = 0; s < score_sets.size(); ++s) {
        const auto& rows = score_sets[s];
        if (rows.empty()) fail(ErrorCode::EmptySet, "residual set '" + row_labels[s] + "' is empty");
        for (const auto& row : rows)
            if (row.size() != col_labels.size()) fail(ErrorCode::LengthMismatch, "score row length mismatch");
        std::vector<double> means(col_labels.size());
        for (std::size_t j = 0; j < means.size(); ++j)
            means[j] = pairwise_sum(rows.size(), [&](std::size_t i) { return rows[i][j]; }) /
                       static_cast<double>(rows.size());
        m.row_labels.push_back(row_labels[s]);
        m.values.push_back(std::move(means));
    }
    return m;
}

inline CorrMatrix correlation_matrix(std::span<const LabeledResiduals> sets, std::span<const Fingerprint> fps,
                                     CorrMode mode = CorrMode::FullStack) {
    const FingerprintBank bank(fps, mode);
    std::vector<std::string> labels;
    std::vector<std::vector<std::vector<double>>> scores;
    for (const auto& set : sets) {
        if (set.residuals.empty()) fail(ErrorCode::EmptySet, "residual set '" + set.label + "' is empty");
        labels.push_back(set.label);
        auto& rows = scores.emplace_back();
        for (const auto& r : set.residuals) rows.push_back(bank.scores(r.planes));
    }
    return correlation_matrix_from_scores(labels, bank.labels(), scores);
}

struct ScoreSet {
    std::vector<double> positives;  // same-source
    std::vector<double> negatives;  // cross-source
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
    /// Twice the Mann-Whitney U count (ties count one half), kept as an
    /// integer so complementary curves are exactly complementary.
    std::uint64_t u_twice = 0;
    std::uint64_t n_pos = 0;
    std::uint64_t n_neg = 0;
};

/// Threshold sweep over all distinct scores, higher score = same source.
/// Equal scores move the curve diagonally, which the trapezoid rule credits
/// as half a win: the area is the Mann-Whitney statistic.
inline RocCurve roc(const ScoreSet& s) {
    if (s.positives.empty() || s.negatives.empty()) fail(ErrorCode::EmptyClass, "ROC needs both classes");
    std::vector<std::pair<double, bool>> all;
    all.reserve(s.positives.size() + s.negatives.size());
    for (double v : s.positives) all.emplace_back(v, true);
    for (double v : s.negatives) all.emplace_back(v, false);
    for (const auto& [v, _] : all)
        if (!std::isfinite(v)) fail(ErrorCode::InvalidConfig, "non-finite score");
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    RocCurve c;
    c.n_pos = s.positives.size();
    c.n_neg = s.negatives.size();
    c.points.push_back({0.0, 0.0});
    std::uint64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < all.size();) {
        std::uint64_t dp = 0, dn = 0;
        const double v = all[i].first;
        for (; i < all.size() && all[i].first == v; ++i) (all[i].second ? dp : dn) += 1;
        c.u_twice += dn * (2 * tp + dp);
        tp += dp;
        fp += dn;
        c.points.push_back({static_cast<double>(fp) / static_cast<double>(c.n_neg),
                            static_cast<double>(tp) / static_cast<double>(c.n_pos)});
    }
    c.auc = static_cast<double>(c.u_twice) / (2.0 * static_cast<double>(c.n_pos) * static_cast<double>(c.n_neg));
    return c;
}

struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<std::uint64_t>> counts;  // rows: true source, cols: predicted
    double display_threshold = 0.01;

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (const auto& row : counts)
            for (auto v : row) t += v;
        return t;
    }
    std::uint64_t correct() const {
        std::uint64_t t = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
        return t;
    }
    double accuracy() const {
        const auto t = total();
        return t == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(t);
    }
    std::uint64_t row_total(std::size_t i) const {
        std::uint64_t t = 0;
        for (auto v : counts[i]) t += v;
        return t;
    }
    /// Row-normalized entry, or nothing when below the display threshold.
    std::optional<double> display_fraction(std::size_t i, std::size_t j) const {
        const auto t = row_total(i);
        if (t == 0) return std::nullopt;
        const double f = static_cast<double>(counts[i][j]) / static_cast<double>(t);
        if (f < display_threshold) return std::nullopt;
        return f;
    }
};

inline ConfusionMatrix confusion(std::span<const std::string> truths, std::span<const std::string> predictions,
                                 std::span<const std::string> labels) {
    if (truths.size() != predictions.size())
        fail(ErrorCode::LengthMismatch, "truths and predictions differ in length");
    auto index_of = [&](const std::string& l) {
        const auto it = std::find(labels.begin(), labels.end(), l);
        if (it == labels.end()) fail(ErrorCode::UnknownLabel, "label '" + l + "' is not in the label list");
        return static_cast<std::size_t>(it - labels.begin());
    };
    ConfusionMatrix m;
    m.labels.assign(labels.begin(), labels.end());
    m.counts.assign(labels.size(), std::vector<std::uint64_t>(labels.size(), 0));
    for (std::size_t k = 0; k < truths.size(); ++k) ++m.counts[index_of(truths[k])][index_of(predictions[k])];
    return m;
}

}  // namespace ganfp
