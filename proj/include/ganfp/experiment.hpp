#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ganfp/attribution.hpp"
#include "ganfp/container.hpp"
#include "ganfp/denoise.hpp"
#include "ganfp/digest.hpp"
#include "ganfp/error.hpp"
#include "ganfp/fingerprint.hpp"
#include "ganfp/imageio.hpp"
#include "ganfp/manifest.hpp"
#include "ganfp/parallel.hpp"
#include "ganfp/report.hpp"

namespace ganfp {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kSummarySchema = "ganfp.identification/1";
inline constexpr std::string_view kRobustnessSchema = "ganfp.robustness/1";

struct RunOptions {
    std::size_t threads = 0;  // 0: one per hardware thread
    CorrMode mode = CorrMode::FullStack;
    bool heatmaps = true;
};

/// Applied to every test image after loading (e.g. JPEG recompression).
using ImageTransform = std::function<Image(const Image&)>;

struct BlockStats {
    std::optional<double> sibling_mean;     // mean off-diagonal entry, same sibling group
    std::optional<double> nonsibling_mean;  // mean off-diagonal entry, different or no group
    std::size_t n_sibling = 0;
    std::size_t n_nonsibling = 0;
};

struct ExperimentReport {
    std::vector<std::string> labels;
    std::vector<std::string> sibling_groups;
    std::vector<Fingerprint> fingerprints;
    std::vector<std::string> fingerprint_files;  // relative to the output directory
    CorrMatrix corr_matrix;                      // rows: test sets, columns: fingerprints
    std::vector<RocCurve> rocs;                  // one-vs-all, empty when degenerate
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    std::size_t ties = 0;
    bool degenerate = false;  // fewer than two sources: attribution is trivial
    std::optional<BlockStats> blocks;
    std::string denoiser_config;
    Digest denoiser_hash{};
    CorrMode mode = CorrMode::FullStack;
    std::size_t n_estimation = 0;
    std::vector<std::size_t> n_test;
    std::vector<std::string> files;  // every file written, relative to the output directory
};

namespace detail {

inline Residual residual_from_file(const std::string& path, const DenoiserConfig& cfg, std::uint32_t index,
                                   const ImageTransform& transform) {
    Image image = read_image(path);
    try {
        if (transform) image = transform(image);
        return extract_residual(image, cfg, std::filesystem::path(path).filename().string(), index);
    } catch (const Error& e) {
        fail(e.code(), path + ": " + e.what());
    }
}

inline void check_residual_shape(const Residual& r, const Shape& expected, const std::string& path) {
    if (r.shape() != expected)
        fail(ErrorCode::ShapeMismatch, path + ": image is " + to_string(r.shape()) + ", source images are " +
                                           to_string(expected));
}

/// Files and directories created by one run, removed again unless committed.
class OutputTransaction {
public:
    explicit OutputTransaction(std::filesystem::path root) : root_(std::move(root)) { make_dirs(root_); }
    OutputTransaction(const OutputTransaction&) = delete;
    OutputTransaction& operator=(const OutputTransaction&) = delete;

    ~OutputTransaction() {
        if (committed_) return;
        std::error_code ec;
        for (auto it = files_.rbegin(); it != files_.rend(); ++it) std::filesystem::remove(root_ / *it, ec);
        for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) std::filesystem::remove(*it, ec);
    }

    /// Absolute path for `rel`, with parent directories created and the file recorded.
    std::string claim(const std::string& rel) {
        const auto full = root_ / rel;
        if (std::filesystem::exists(full) && !std::filesystem::is_regular_file(full))
            fail(ErrorCode::IoError, "cannot write " + full.string() + ": not a regular file");
        make_dirs(full.parent_path());
        files_.push_back(rel);
        return full.string();
    }

    void write_text(const std::string& rel, const std::string& text) {
        write_file_bytes(claim(rel), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }

    void write_heatmap(const std::string& rel_png, std::span<const double> values, std::size_t w, std::size_t h) {
        const auto png = claim(rel_png);
        claim(std::filesystem::path(rel_png).replace_extension(".scale.json").string());
        ganfp::write_heatmap(png, values, w, h);
    }

    const std::vector<std::string>& files() const { return files_; }
    void commit() { committed_ = true; }

private:
    void make_dirs(const std::filesystem::path& dir) {
        if (dir.empty() || std::filesystem::exists(dir)) return;
        make_dirs(dir.parent_path());
        std::error_code ec;
        if (!std::filesystem::create_directory(dir, ec) && ec)
            fail(ErrorCode::IoError, "cannot create directory " + dir.string() + ": " + ec.message());
        dirs_.push_back(dir);
    }

    std::filesystem::path root_;
    std::vector<std::string> files_;
    std::vector<std::filesystem::path> dirs_;
    bool committed_ = false;
};

inline std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

/// Fingerprint of each source from its estimation split. Residuals are
/// extracted concurrently in batches and accumulated in manifest order.
inline std::vector<Fingerprint> estimate_fingerprints(const DatasetManifest& manifest, const DenoiserConfig& cfg,
                                                      const RunOptions& options = {}) {
    cfg.validate();
    const std::size_t threads = resolve_threads(options.threads);
    const std::size_t batch = std::max<std::size_t>(16, 4 * threads);
    std::vector<Fingerprint> out;
    for (std::size_t s = 0; s < manifest.sources.size(); ++s) {
        const auto paths = manifest.estimation_paths(s);
        FingerprintAccumulator acc;
        std::optional<Shape> shape;
        for (std::size_t start = 0; start < paths.size(); start += batch) {
            const std::size_t n = std::min(batch, paths.size() - start);
            std::vector<Residual> residuals(n);
            parallel_for(n, threads, [&](std::size_t i) {
                residuals[i] = detail::residual_from_file(paths[start + i], cfg, static_cast<std::uint32_t>(start + i), {});
            });
            for (std::size_t i = 0; i < n; ++i) {
                if (!shape) shape = residuals[i].shape();
                detail::check_residual_shape(residuals[i], *shape, paths[start + i]);
                acc.add(residuals[i]);
            }
        }
        out.push_back(acc.mean(manifest.sources[s].label));
    }
    return out;
}

/// scores[s][i][j]: correlation of test image i of source s with fingerprint j.
using TestScores = std::vector<std::vector<std::vector<double>>>;

inline TestScores score_test_split(const DatasetManifest& manifest, const DenoiserConfig& cfg,
                                   const FingerprintBank& bank, const RunOptions& options = {},
                                   const ImageTransform& transform = {}) {
    cfg.validate();
    const std::size_t threads = resolve_threads(options.threads);
    TestScores out;
    for (std::size_t s = 0; s < manifest.sources.size(); ++s) {
        const auto paths = manifest.test_paths(s);
        auto& rows = out.emplace_back(paths.size());
        parallel_for(paths.size(), threads, [&](std::size_t i) {
            const auto index = static_cast<std::uint32_t>(manifest.n_estimation + i);
            const Residual r = detail::residual_from_file(paths[i], cfg, index, transform);
            detail::check_residual_shape(r, bank.shape(), paths[i]);
            rows[i] = bank.scores(r.planes);
        });
    }
    return out;
}

inline BlockStats block_stats(const CorrMatrix& m, std::span<const std::string> groups) {
    BlockStats b;
    double sib = 0.0, non = 0.0;
    for (std::size_t i = 0; i < m.values.size(); ++i)
        for (std::size_t j = 0; j < m.values[i].size(); ++j) {
            if (i == j) continue;
            if (!groups[i].empty() && groups[i] == groups[j]) {
                sib += m.values[i][j];
                ++b.n_sibling;
            } else {
                non += m.values[i][j];
                ++b.n_nonsibling;
            }
        }
    if (b.n_sibling) b.sibling_mean = sib / static_cast<double>(b.n_sibling);
    if (b.n_nonsibling) b.nonsibling_mean = non / static_cast<double>(b.n_nonsibling);
    return b;
}

/// Metrics from fingerprints and test scores; no I/O.
inline ExperimentReport assemble_report(const DatasetManifest& manifest, const DenoiserConfig& cfg,
                                        std::vector<Fingerprint> fingerprints, const TestScores& scores,
                                        CorrMode mode) {
    ExperimentReport r;
    r.labels = manifest.labels();
    for (const auto& s : manifest.sources) r.sibling_groups.push_back(s.sibling_group);
    r.fingerprints = std::move(fingerprints);
    for (const auto& l : r.labels) r.fingerprint_files.push_back("fingerprints/" + l + ".gfpr");
    r.denoiser_config = cfg.canonical();
    r.denoiser_hash = cfg.hash();
    r.mode = mode;
    r.n_estimation = manifest.n_estimation;
    for (std::size_t s = 0; s < manifest.sources.size(); ++s) r.n_test.push_back(manifest.test_count(s));

    r.corr_matrix = correlation_matrix_from_scores(r.labels, r.labels, scores);

    std::vector<std::string> truths, predictions;
    for (std::size_t s = 0; s < scores.size(); ++s)
        for (const auto& row : scores[s]) {
            const auto [best, tie] = argmax_with_tie(row);
            if (tie) ++r.ties;
            truths.push_back(r.labels[s]);
            predictions.push_back(r.labels[best]);
        }
    r.confusion = confusion(truths, predictions, r.labels);
    r.accuracy = r.confusion.accuracy();

    r.degenerate = r.labels.size() < 2;
    if (!r.degenerate)
        for (std::size_t j = 0; j < r.labels.size(); ++j) {
            ScoreSet set;
            for (std::size_t s = 0; s < scores.size(); ++s)
                for (const auto& row : scores[s]) (s == j ? set.positives : set.negatives).push_back(row[j]);
            r.rocs.push_back(roc(set));
        }

    const bool grouped = std::any_of(r.sibling_groups.begin(), r.sibling_groups.end(),
                                     [](const std::string& g) { return !g.empty(); });
    if (grouped) r.blocks = block_stats(r.corr_matrix, r.sibling_groups);
    return r;
}

/// summary.json content. Contains nothing run-specific beyond the inputs
/// (no timestamps, paths or thread counts), so reruns are byte-identical.
inline nlohmann::ordered_json summary_json(const ExperimentReport& r) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema"] = kSummarySchema;
    j["tool_version"] = kToolVersion;
    j["container_version"] = kContainerVersion;
    j["denoiser"] = {{"hash", to_hex(r.denoiser_hash)}, {"config", r.denoiser_config}};
    j["corr_mode"] = to_string(r.mode);
    j["split"] = {{"n_estimation", r.n_estimation}, {"rule", "first n_estimation images per source in manifest order"}};
    auto sources = ordered_json::array();
    for (std::size_t s = 0; s < r.labels.size(); ++s) {
        ordered_json src;
        src["label"] = r.labels[s];
        src["sibling_group"] = r.sibling_groups[s].empty() ? ordered_json(nullptr) : ordered_json(r.sibling_groups[s]);
        src["n_estimation"] = r.n_estimation;
        src["n_test"] = r.n_test[s];
        src["fingerprint"] = r.fingerprint_files[s];
        src["auc"] = r.rocs.empty() ? ordered_json(nullptr) : ordered_json(r.rocs[s].auc);
        sources.push_back(std::move(src));
    }
    j["sources"] = std::move(sources);
    j["accuracy"] = r.accuracy;
    j["correct"] = r.confusion.correct();
    j["total"] = r.confusion.total();
    j["ties"] = r.ties;
    j["degenerate_single_source"] = r.degenerate;
    if (r.blocks) {
        const auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
        j["block_structure"] = {{"sibling_offdiag_mean", opt(r.blocks->sibling_mean)},
                                {"nonsibling_offdiag_mean", opt(r.blocks->nonsibling_mean)},
                                {"n_sibling_entries", r.blocks->n_sibling},
                                {"n_nonsibling_entries", r.blocks->n_nonsibling}};
    }
    j["files"] = r.files;
    return j;
}

namespace detail {

/// Writes the report under `prefix` ("" or "sub/") of the transaction root.
inline void write_report_files(ExperimentReport& r, OutputTransaction& out, const std::string& prefix,
                               bool fingerprints, bool heatmaps) {
    const auto before = out.files().size();
    if (fingerprints)
        for (std::size_t s = 0; s < r.labels.size(); ++s)
            write_fingerprint(out.claim(prefix + r.fingerprint_files[s]), r.fingerprints[s]);
    out.write_text(prefix + "corr_matrix.csv", to_csv(r.corr_matrix));
    out.write_text(prefix + "corr_matrix.json", json_text(to_json(r.corr_matrix)));
    for (std::size_t s = 0; s < r.rocs.size(); ++s)
        out.write_text(prefix + "roc_" + r.labels[s] + ".csv", to_csv(r.rocs[s]));
    out.write_text(prefix + "confusion.csv", to_csv(r.confusion));
    out.write_text(prefix + "confusion.json", json_text(to_json(r.confusion)));
    if (heatmaps) {
        std::vector<double> cm;
        for (const auto& row : r.corr_matrix.values) cm.insert(cm.end(), row.begin(), row.end());
        out.write_heatmap(prefix + "heatmaps/corr_matrix.png", cm, r.labels.size(), r.labels.size());
        if (fingerprints)
            for (std::size_t s = 0; s < r.labels.size(); ++s) {
                const auto& fp = r.fingerprints[s];
                const std::size_t n = fp.shape().width * fp.shape().height;
                std::vector<double> avg(n, 0.0);
                for (std::size_t c = 0; c < fp.planes.size(); ++c) {
                    const auto v = fp.planes[c].values();
                    const std::vector<double> plane(v.begin(), v.end());
                    for (std::size_t i = 0; i < n; ++i) avg[i] += plane[i] / static_cast<double>(fp.planes.size());
                    out.write_heatmap(prefix + "heatmaps/fingerprint_" + r.labels[s] + "_c" + std::to_string(c) + ".png",
                                      plane, fp.shape().width, fp.shape().height);
                }
                out.write_heatmap(prefix + "heatmaps/fingerprint_" + r.labels[s] + "_mean.png", avg, fp.shape().width,
                                  fp.shape().height);
            }
    }
    r.files.clear();
    for (std::size_t i = before; i < out.files().size(); ++i) r.files.push_back(out.files()[i].substr(prefix.size()));
    r.files.push_back("summary.json");
    out.write_text(prefix + "summary.json", json_text(summary_json(r)));
}

inline void check_split_disjoint(const DatasetManifest& m) {
    for (std::size_t s = 0; s < m.sources.size(); ++s) {
        auto est = m.estimation_paths(s);
        std::sort(est.begin(), est.end());
        for (const auto& p : m.test_paths(s))
            if (std::binary_search(est.begin(), est.end(), p))
                fail(ErrorCode::InvalidConfig, "image " + p + " appears in both estimation and test splits of '" +
                                                   m.sources[s].label + "'");
    }
}

}  // namespace detail

/// Full attribution protocol: fingerprints from the estimation split, test
/// images scored against every fingerprint, maximum-correlation decision,
/// metrics and reports written to `out_dir`. On failure nothing written by
/// this run is left behind.
inline ExperimentReport run_identification(const DatasetManifest& manifest, const DenoiserConfig& cfg,
                                           const std::string& out_dir, const RunOptions& options = {}) {
    validate_manifest(manifest);
    detail::check_split_disjoint(manifest);
    auto fps = estimate_fingerprints(manifest, cfg, options);
    const FingerprintBank bank(fps, options.mode);
    const auto scores = score_test_split(manifest, cfg, bank, options);
    auto report = assemble_report(manifest, cfg, std::move(fps), scores, options.mode);
    detail::OutputTransaction out(out_dir);
    detail::write_report_files(report, out, "", true, options.heatmaps);
    out.commit();
    return report;
}

struct RecompressedRun {
    int quality = 0;
    ExperimentReport report;
    double accuracy_delta = 0.0;  // original accuracy minus recompressed accuracy
};

struct RobustnessReport {
    ExperimentReport original;
    std::vector<RecompressedRun> recompressed;
};

inline nlohmann::ordered_json robustness_json(const RobustnessReport& r) {
    nlohmann::ordered_json j;
    j["schema"] = kRobustnessSchema;
    j["tool_version"] = kToolVersion;
    j["protocol"] = "fingerprints from original estimation images; only test images are JPEG re-encoded (4:4:4)";
    j["original_accuracy"] = r.original.accuracy;
    auto runs = nlohmann::ordered_json::array();
    for (const auto& q : r.recompressed)
        runs.push_back({{"quality", q.quality},
                        {"accuracy", q.report.accuracy},
                        {"accuracy_delta", q.accuracy_delta},
                        {"report_dir", "jpeg_q" + std::to_string(q.quality)}});
    j["runs"] = std::move(runs);
    return j;
}

/// Identification on the original test images and on JPEG re-encodings at
/// each quality, all against fingerprints from the original estimation
/// images. Layout: original/ (full report), jpeg_q<Q>/ (scores-based
/// reports), robustness.json.
inline RobustnessReport run_robustness(const DatasetManifest& manifest, const DenoiserConfig& cfg,
                                       std::span<const int> qualities, const std::string& out_dir,
                                       const RunOptions& options = {}) {
    if (qualities.empty()) fail(ErrorCode::InvalidConfig, "no recompression quality given");
    for (int q : qualities)
        if (q < 1 || q > 100)
            fail(ErrorCode::UnsupportedCodec, "JPEG quality must be in [1, 100], got " + std::to_string(q));
    validate_manifest(manifest);
    detail::check_split_disjoint(manifest);

    auto fps = estimate_fingerprints(manifest, cfg, options);
    const FingerprintBank bank(fps, options.mode);
    RobustnessReport result;
    const auto original_scores = score_test_split(manifest, cfg, bank, options);
    for (int q : qualities) {
        const auto scores = score_test_split(manifest, cfg, bank, options,
                                             [q](const Image& im) { return recompress_jpeg(im, q); });
        auto rep = assemble_report(manifest, cfg, fps, scores, options.mode);
        result.recompressed.push_back({q, std::move(rep), 0.0});
    }
    result.original = assemble_report(manifest, cfg, std::move(fps), original_scores, options.mode);
    for (auto& q : result.recompressed) {
        q.accuracy_delta = result.original.accuracy - q.report.accuracy;
        q.report.fingerprint_files.clear();
        for (const auto& l : q.report.labels) q.report.fingerprint_files.push_back("../original/fingerprints/" + l + ".gfpr");
    }

    detail::OutputTransaction out(out_dir);
    detail::write_report_files(result.original, out, "original/", true, options.heatmaps);
    for (auto& q : result.recompressed)
        detail::write_report_files(q.report, out, "jpeg_q" + std::to_string(q.quality) + "/", false, options.heatmaps);
    out.write_text("robustness.json", detail::json_text(robustness_json(result)));
    out.commit();
    return result;
}

inline RobustnessReport run_robustness(const DatasetManifest& manifest, const DenoiserConfig& cfg, int quality,
                                       const std::string& out_dir, const RunOptions& options = {}) {
    const int qualities[] = {quality};
    return run_robustness(manifest, cfg, qualities, out_dir, options);
}

}  // namespace ganfp
