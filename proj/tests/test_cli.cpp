#include <sys/wait.h>

#include <cstdlib>

#include <gtest/gtest.h>
#include <json.hpp>

#include "corpus.hpp"
#include "ganfp/ganfp.hpp"

using namespace ganfp;
using namespace testing_corpus;

namespace {

struct RunResult {
    int status = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const TempDir& dir, const std::string& args) {
    const auto out = dir.path() / "stdout.txt", err = dir.path() / "stderr.txt";
    const std::string cmd = std::string("\"") + GANFP_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = read_text(out);
    r.err = read_text(err);
    return r;
}

void write(const fs::path& p, const std::string& text) {
    write_file_bytes(p.string(), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Cli, UsageErrorsExitTwoWithJson) {
    TempDir dir("cli_usage");
    for (const char* args : {"", "identify", "identify --manifest /no/such/file --out x", "frobnicate"}) {
        const auto r = run_cli(dir, args);
        EXPECT_EQ(r.status, 2) << args;
        EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "UsageError") << args;
    }
    const auto help = run_cli(dir, "--help");
    EXPECT_EQ(help.status, 0);
    EXPECT_NE(help.out.find("identify"), std::string::npos);
}

TEST(Cli, ResidualEstimateCorrChain) {
    TempDir dir("cli_chain");
    const auto spec = small_source("S", 5);
    const auto pattern = true_fingerprint(spec);
    for (int i = 0; i < 4; ++i) write_png(dir.str("img" + std::to_string(i) + ".png"), generate_image(spec, pattern, i));

    for (int i = 0; i < 4; ++i) {
        const auto r = run_cli(dir, "residual --image " + q(dir.path() / ("img" + std::to_string(i) + ".png")) +
                                        " --index " + std::to_string(i) + " --out " +
                                        q(dir.path() / ("r" + std::to_string(i) + ".gres")));
        ASSERT_EQ(r.status, 0) << r.err;
    }
    const auto r0 = read_residual(dir.str("r0.gres"));
    EXPECT_EQ(r0.source_id, "img0.png");
    EXPECT_EQ(r0.planes, extract_residual(read_image(dir.str("img0.png")), DenoiserConfig{}).planes);
    EXPECT_EQ(read_residual(dir.str("r3.gres")).source_index, 3u);

    std::string list;
    for (int i = 0; i < 3; ++i) list += " " + q(dir.path() / ("r" + std::to_string(i) + ".gres"));
    auto r = run_cli(dir, "estimate --residual" + list + " --label S --out " + q(dir.path() / "S.gfpr"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto fp = read_fingerprint(dir.str("S.gfpr"));
    EXPECT_EQ(fp.n_residuals, 3u);
    EXPECT_EQ(fp.source_label, "S");
    EXPECT_EQ(fp.denoiser_hash, DenoiserConfig{}.hash());

    r = run_cli(dir, "corr --residual " + q(dir.path() / "r3.gres") + " --fingerprint " + q(dir.path() / "S.gfpr"));
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NEAR(std::stod(r.out), corr(read_residual(dir.str("r3.gres")).planes, fp.planes), 1e-12);

    r = run_cli(dir, "corr --mode sideways --residual " + q(dir.path() / "r3.gres") + " --fingerprint " +
                         q(dir.path() / "S.gfpr"));
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "ParseError");
}

TEST(Cli, EstimateRejectsMixedDenoisers) {
    TempDir dir("cli_mixed");
    const auto img = generate_image(small_source("S", 6), true_fingerprint(small_source("S", 6)), 0);
    write_png(dir.str("x.png"), img);
    write(dir.path() / "alt.cfg", "noise_variance = 4\n");
    ASSERT_EQ(run_cli(dir, "residual --image " + q(dir.path() / "x.png") + " --out " + q(dir.path() / "a.gres")).status, 0);
    ASSERT_EQ(run_cli(dir, "residual --denoiser-config " + q(dir.path() / "alt.cfg") + " --image " +
                               q(dir.path() / "x.png") + " --out " + q(dir.path() / "b.gres"))
                  .status,
              0);
    const auto r = run_cli(dir, "estimate --residual " + q(dir.path() / "a.gres") + " " + q(dir.path() / "b.gres") +
                                    " --out " + q(dir.path() / "f.gfpr"));
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "MixedDenoisers");
    EXPECT_FALSE(fs::exists(dir.path() / "f.gfpr"));
}

TEST(Cli, EnergyCurveAndAutocorr) {
    TempDir dir("cli_curve");
    const auto spec = small_source("S", 7);
    const auto pattern = true_fingerprint(spec);
    std::string list;
    for (int i = 0; i < 8; ++i) {
        Residual r = extract_residual(generate_image(spec, pattern, i), DenoiserConfig{}, "i", i);
        const auto p = dir.path() / ("r" + std::to_string(i) + ".gres");
        write_residual(p.string(), r);
        list += " " + q(p);
    }
    auto r = run_cli(dir, "energy-curve --residual" + list + " --n 1,2,4,8 --out " + q(dir.path() / "curve"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto csv = read_text(dir.path() / "curve" / "energy_curve.csv");
    EXPECT_EQ(csv.rfind("n,energy\n1,", 0), 0u);
    const auto fit = nlohmann::json::parse(read_text(dir.path() / "curve" / "energy_fit.json"));
    EXPECT_GE(fit["inverse_n"]["e_inf"].get<double>(), 0.0);
    EXPECT_EQ(fit["paper_exp"]["model"], "paper_exp");

    r = run_cli(dir, "energy-curve --residual" + list + " --n 4,16 --out " + q(dir.path() / "bad"));
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "NotEnoughResiduals");

    write_fingerprint(dir.str("truth.gfpr"), {pattern, 1, "S", {}});
    r = run_cli(dir, "autocorr --fingerprint " + q(dir.path() / "truth.gfpr") + " --max-lag 4 --out " +
                         q(dir.path() / "ac"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto ac = read_text(dir.path() / "ac" / "autocorr.csv");
    EXPECT_EQ(ac.substr(0, ac.find('\n')), "dy\\dx,-4,-3,-2,-1,0,1,2,3,4");
    EXPECT_EQ(read_image(dir.str("ac/autocorr.png")).shape(), (Shape{9, 9, 1}));
    EXPECT_TRUE(fs::is_regular_file(dir.path() / "ac" / "autocorr.scale.json"));
}

TEST(Cli, SynthThenIdentifyAndMatrix) {
    TempDir dir("cli_synth");
    write(dir.path() / "spec.txt",
          "width = 64\nheight = 64\n[source]\nlabel = A\nseed = 1\n[source]\nlabel = B\nseed = 2\n");
    auto r = run_cli(dir, "synth --spec " + q(dir.path() / "spec.txt") + " --count 20 --n-estimation 16 --threads 2 --out " +
                              q(dir.path() / "data"));
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_TRUE(fs::is_regular_file(dir.path() / "data" / "B" / "B_00019.png"));
    const auto truth = read_fingerprint(dir.str("data/truth/A.gfpr"));
    EXPECT_EQ(truth.planes, true_fingerprint(parse_synth_specs(read_text(dir.path() / "spec.txt"))[0]));

    r = run_cli(dir, "identify --manifest " + q(dir.path() / "data" / "manifest.toml") + " --out " +
                         q(dir.path() / "report"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto summary = nlohmann::json::parse(read_text(dir.path() / "report" / "summary.json"));
    EXPECT_EQ(summary["total"], 8);
    EXPECT_EQ(r.out, "accuracy " + format_real(summary["accuracy"].get<double>()) + "\n");

    r = run_cli(dir, "matrix --manifest " + q(dir.path() / "data" / "manifest.toml") + " --out " +
                         q(dir.path() / "matrix"));
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(read_text(dir.path() / "matrix" / "corr_matrix.csv"), read_text(dir.path() / "report" / "corr_matrix.csv"));
}

TEST(Cli, LibraryErrorsExitOneWithCode) {
    TempDir dir("cli_err");
    write(dir.path() / "m.toml", "n_estimation = 5\n[[source]]\nlabel = A\nimage = a.png\n");
    write(dir.path() / "a.png", "x");
    auto r = run_cli(dir, "identify --manifest " + q(dir.path() / "m.toml") + " --out " + q(dir.path() / "o"));
    EXPECT_EQ(r.status, 1);
    const auto j = nlohmann::json::parse(r.err);
    EXPECT_EQ(j["error"], "TooFewImages");
    EXPECT_FALSE(j["message"].get<std::string>().empty());

    write(dir.path() / "bad.gfpr", "GFPRjunk");
    r = run_cli(dir, "autocorr --fingerprint " + q(dir.path() / "bad.gfpr") + " --out " + q(dir.path() / "ac"));
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "FormatError");

    r = run_cli(dir, "robustness --quality 0 --manifest " + q(dir.path() / "m.toml") + " --out " + q(dir.path() / "r"));
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "UnsupportedCodec");
}
