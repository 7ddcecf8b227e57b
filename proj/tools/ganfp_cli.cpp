#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ganfp/ganfp.hpp"

namespace fs = std::filesystem;
using namespace ganfp;

namespace {

struct Common {
    std::size_t threads = 0;
    std::string denoiser_config;
    std::string out;
    std::string mode = "full_stack";

    DenoiserConfig denoiser() const {
        return denoiser_config.empty() ? DenoiserConfig{} : DenoiserConfig::load(denoiser_config);
    }
    RunOptions run_options() const { return {threads, parse_corr_mode(mode), true}; }
};

void add_common(CLI::App* cmd, Common& c, bool out_required, const std::string& out_help) {
    cmd->add_option("--threads", c.threads, "Worker threads (0 = one per hardware thread)");
    cmd->add_option("--denoiser-config", c.denoiser_config, "Denoiser key=value config file")->check(CLI::ExistingFile);
    auto* out = cmd->add_option("--out", c.out, out_help);
    if (out_required) out->required();
}

void write_text(const std::string& path, const std::string& text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string json_text(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

nlohmann::ordered_json fit_json(const EnergyFit& f) {
    return {{"model", to_string(f.model)}, {"e_inf", f.e_inf}, {"e0", f.e0}, {"rss", f.rss}};
}

int cmd_residual(const Common& c, const std::string& image_path, std::uint32_t index) {
    const auto cfg = c.denoiser();
    const Image image = read_image(image_path);
    write_residual(c.out, extract_residual(image, cfg, fs::path(image_path).filename().string(), index));
    return 0;
}

int cmd_estimate(const Common& c, const std::vector<std::string>& files, const std::string& label) {
    FingerprintAccumulator acc;
    for (const auto& f : files) acc.add(read_residual(f));
    write_fingerprint(c.out, acc.mean(label));
    return 0;
}

int cmd_energy_curve(const Common& c, const std::vector<std::string>& files, const std::vector<std::size_t>& ns) {
    std::vector<Residual> residuals;
    for (const auto& f : files) residuals.push_back(read_residual(f));
    const auto curve = energy_progression(residuals, ns);
    std::string csv = "n,energy\n";
    for (const auto& p : curve.points) csv += std::to_string(p.n) + "," + format_real(p.energy) + "\n";
    fs::create_directories(c.out);
    write_text((fs::path(c.out) / "energy_curve.csv").string(), csv);
    nlohmann::ordered_json j;
    if (curve.points.size() >= 3) {
        j["inverse_n"] = fit_json(fit_energy_curve(curve, DecayModel::InverseN));
        j["paper_exp"] = fit_json(fit_energy_curve(curve, DecayModel::PaperExp));
    }
    write_text((fs::path(c.out) / "energy_fit.json").string(), json_text(j));
    return 0;
}

int cmd_autocorr(const Common& c, const std::string& fp_path, int max_lag) {
    const auto map = autocorrelation(read_fingerprint(fp_path), max_lag);
    const int side = static_cast<int>(map.side());
    std::string csv = "dy\\dx";
    for (int dx = -max_lag; dx <= max_lag; ++dx) csv += "," + std::to_string(dx);
    csv += "\n";
    for (int dy = -max_lag; dy <= max_lag; ++dy) {
        csv += std::to_string(dy);
        for (int dx = -max_lag; dx <= max_lag; ++dx) csv += "," + format_real(map(dx, dy));
        csv += "\n";
    }
    fs::create_directories(c.out);
    write_text((fs::path(c.out) / "autocorr.csv").string(), csv);
    write_heatmap((fs::path(c.out) / "autocorr.png").string(), map.values, static_cast<std::size_t>(side),
                  static_cast<std::size_t>(side));
    return 0;
}

int cmd_corr(const Common& c, const std::string& residual, const std::string& fingerprint) {
    const auto r = read_residual(residual);
    const auto f = read_fingerprint(fingerprint);
    std::cout << format_real(corr(r.planes, f.planes, parse_corr_mode(c.mode))) << "\n";
    return 0;
}

int cmd_matrix(const Common& c, const std::string& manifest_path) {
    const auto manifest = load_manifest(manifest_path);
    const auto cfg = c.denoiser();
    const auto opts = c.run_options();
    const auto fps = estimate_fingerprints(manifest, cfg, opts);
    const FingerprintBank bank(fps, opts.mode);
    const auto scores = score_test_split(manifest, cfg, bank, opts);
    const auto labels = manifest.labels();
    const auto m = correlation_matrix_from_scores(labels, labels, scores);
    fs::create_directories(c.out);
    write_text((fs::path(c.out) / "corr_matrix.csv").string(), to_csv(m));
    write_text((fs::path(c.out) / "corr_matrix.json").string(), json_text(to_json(m)));
    return 0;
}

int cmd_identify(const Common& c, const std::string& manifest_path) {
    const auto report = run_identification(load_manifest(manifest_path), c.denoiser(), c.out, c.run_options());
    std::cout << "accuracy " << format_real(report.accuracy) << "\n";
    return 0;
}

int cmd_robustness(const Common& c, const std::string& manifest_path, const std::vector<int>& qualities) {
    for (int q : qualities)
        if (q < 1 || q > 100) fail(ErrorCode::UnsupportedCodec, "JPEG quality must be in [1, 100], got " + std::to_string(q));
    const auto r = run_robustness(load_manifest(manifest_path), c.denoiser(), qualities, c.out, c.run_options());
    std::cout << "original accuracy " << format_real(r.original.accuracy) << "\n";
    for (const auto& q : r.recompressed)
        std::cout << "quality " << q.quality << " accuracy " << format_real(q.report.accuracy) << " delta "
                  << format_real(q.accuracy_delta) << "\n";
    return 0;
}

/// Writes <out>/<label>/<label>_NNNNN.png, <out>/truth/<label>.gfpr and
/// <out>/manifest.toml listing every source.
int cmd_synth(const Common& c, const std::string& spec_path, std::size_t count, std::size_t n_estimation) {
    const auto specs = load_synth_specs(spec_path);
    if (count < 1) fail(ErrorCode::InvalidConfig, "count must be >= 1");
    const fs::path out(c.out);
    fs::create_directories(out / "truth");
    std::string manifest = "n_estimation = " + std::to_string(n_estimation) + "\n";
    for (const auto& spec : specs) {
        const auto pattern = true_fingerprint(spec);
        fs::create_directories(out / spec.label);
        parallel_for(count, c.threads, [&](std::size_t i) {
            char name[32];
            std::snprintf(name, sizeof name, "_%05zu.png", i);
            write_png((out / spec.label / (spec.label + name)).string(), generate_image(spec, pattern, i));
        });
        write_fingerprint((out / "truth" / (spec.label + ".gfpr")).string(), {pattern, 1, spec.label, {}});
        manifest += "\n[[source]]\nlabel = \"" + spec.label + "\"\ndirectory = \"" + spec.label + "\"\n";
        if (spec.shared) manifest += "sibling_group = \"" + spec.shared->group + "\"\n";
    }
    write_text((out / "manifest.toml").string(), manifest);
    return 0;
}

void print_error(std::string_view code, std::string_view message) {
    nlohmann::ordered_json j;
    j["error"] = code;
    j["message"] = message;
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GAN fingerprint extraction, attribution and evaluation"};
    app.require_subcommand(1);
    Common common;
    std::string image, manifest, residual, fingerprint, label = "fingerprint", spec;
    std::vector<std::string> residuals;
    std::vector<std::size_t> ns{2, 8, 32, 128, 512};
    std::vector<int> qualities;
    std::uint32_t index = 0;
    int max_lag = 32;
    std::size_t count = 1000, n_estimation = 512;

    auto* res = app.add_subcommand("residual", "Image -> residual file");
    add_common(res, common, true, "Output residual file");
    res->add_option("--image", image, "Input PNG or JPEG")->required()->check(CLI::ExistingFile);
    res->add_option("--index", index, "Source image index stored in the container");

    auto* est = app.add_subcommand("estimate", "Residual files -> fingerprint container");
    add_common(est, common, true, "Output fingerprint file");
    est->add_option("--residual,residuals", residuals, "Residual files")->required()->check(CLI::ExistingFile);
    est->add_option("--label", label, "Source label");

    auto* ec = app.add_subcommand("energy-curve", "Fingerprint energy versus N, with decay fits");
    add_common(ec, common, true, "Output directory");
    ec->add_option("--residual,residuals", residuals, "Residual files, in averaging order")
        ->required()
        ->check(CLI::ExistingFile);
    ec->add_option("--n", ns, "Averaging sizes")->delimiter(',');

    auto* ac = app.add_subcommand("autocorr", "Fingerprint -> autocorrelation map and heatmap");
    add_common(ac, common, true, "Output directory");
    ac->add_option("--fingerprint", fingerprint, "Fingerprint file")->required()->check(CLI::ExistingFile);
    ac->add_option("--max-lag", max_lag, "Largest lag in each direction");

    auto* co = app.add_subcommand("corr", "Correlation of a residual with a fingerprint");
    co->add_option("--residual", residual, "Residual file")->required()->check(CLI::ExistingFile);
    co->add_option("--fingerprint", fingerprint, "Fingerprint file")->required()->check(CLI::ExistingFile);
    co->add_option("--mode", common.mode, "full_stack or per_channel_mean");

    auto* mx = app.add_subcommand("matrix", "Manifest -> correlation matrix");
    add_common(mx, common, true, "Output directory");
    mx->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
    mx->add_option("--mode", common.mode, "full_stack or per_channel_mean");

    auto* id = app.add_subcommand("identify", "Manifest -> full attribution report");
    add_common(id, common, true, "Report directory");
    id->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
    id->add_option("--mode", common.mode, "full_stack or per_channel_mean");

    auto* rb = app.add_subcommand("robustness", "Attribution on JPEG re-encoded test images");
    add_common(rb, common, true, "Report directory");
    rb->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
    rb->add_option("--quality", qualities, "JPEG quality, repeatable")->required();
    rb->add_option("--mode", common.mode, "full_stack or per_channel_mean");

    auto* sy = app.add_subcommand("synth", "Synthetic spec -> images, true fingerprints and manifest");
    add_common(sy, common, true, "Output directory");
    sy->add_option("--spec", spec, "Synthetic source spec file")->required()->check(CLI::ExistingFile);
    sy->add_option("--count", count, "Images per source");
    sy->add_option("--n-estimation", n_estimation, "Split written to the manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error("UsageError", e.what());
        return 2;
    }

    try {
        if (*res) return cmd_residual(common, image, index);
        if (*est) return cmd_estimate(common, residuals, label);
        if (*ec) return cmd_energy_curve(common, residuals, ns);
        if (*ac) return cmd_autocorr(common, fingerprint, max_lag);
        if (*co) return cmd_corr(common, residual, fingerprint);
        if (*mx) return cmd_matrix(common, manifest);
        if (*id) return cmd_identify(common, manifest);
        if (*rb) return cmd_robustness(common, manifest, qualities);
        if (*sy) return cmd_synth(common, spec, count, n_estimation);
    } catch (const Error& e) {
        print_error(to_string(e.code()), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("InternalError", e.what());
        return 1;
    }
    return 1;
}
