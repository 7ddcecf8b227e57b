#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ganfp/container.hpp"
#include "ganfp/imageio.hpp"
#include "ganfp/keyvalue.hpp"
#include "ganfp/report.hpp"

namespace fs = std::filesystem;
using namespace ganfp;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

fs::path scratch_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("ganfp_formats_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Fingerprint sample_fingerprint() {
    Fingerprint fp;
    fp.planes = {ImagePlane(2, 1, {1.5f, -2.0f})};
    fp.n_residuals = 512;
    fp.source_label = "ab";
    for (std::size_t i = 0; i < fp.denoiser_hash.size(); ++i) fp.denoiser_hash[i] = static_cast<std::uint8_t>(i);
    return fp;
}

// Byte layout built by hand: little-endian fields in declaration order.
std::vector<std::uint8_t> expected_bytes(const Fingerprint& fp) {
    std::vector<std::uint8_t> b{'G', 'F', 'P', 'R', 1, 0, 2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 2, 0, 0};
    b.insert(b.end(), fp.denoiser_hash.begin(), fp.denoiser_hash.end());
    b.insert(b.end(), {2, 0, 'a', 'b'});
    for (float v : fp.planes[0].values()) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        for (int k = 0; k < 4; ++k) b.push_back(static_cast<std::uint8_t>(u >> (8 * k)));
    }
    return b;
}

Image random_image(std::size_t w, std::size_t h, std::size_t ch, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<ImagePlane> planes;
    for (std::size_t c = 0; c < ch; ++c) {
        ImagePlane p(w, h);
        for (auto& v : p.values()) v = static_cast<float>(rng() % 256);
        planes.push_back(p);
    }
    return Image(planes);
}

}  // namespace

TEST(Container, FingerprintByteLayout) {
    const auto fp = sample_fingerprint();
    EXPECT_EQ(encode_fingerprint(fp), expected_bytes(fp));
}

TEST(Container, FingerprintRoundTrip) {
    std::mt19937_64 rng(1);
    std::normal_distribution<float> d;
    Fingerprint fp;
    for (int c = 0; c < 3; ++c) {
        ImagePlane p(17, 9);
        for (auto& v : p.values()) v = d(rng);
        fp.planes.push_back(p);
    }
    fp.n_residuals = 7;
    fp.source_label = "source-A";
    fp.denoiser_hash = DenoiserConfig{}.hash();
    const auto bytes = encode_fingerprint(fp);
    const auto back = decode_fingerprint(bytes);
    EXPECT_EQ(back.planes, fp.planes);
    EXPECT_EQ(back.n_residuals, 7u);
    EXPECT_EQ(back.source_label, "source-A");
    EXPECT_EQ(back.denoiser_hash, fp.denoiser_hash);
    EXPECT_EQ(encode_fingerprint(back), bytes);
}

TEST(Container, ResidualFileRoundTrip) {
    const auto dir = scratch_dir("res");
    Residual r;
    r.planes = {ImagePlane(3, 2, {1, 2, 3, 4, 5, 6})};
    r.source_id = "img_00042.png";
    r.source_index = 42;
    r.denoiser_hash = sha256("x");
    const auto path = (dir / "r.gres").string();
    write_residual(path, r);
    const auto back = read_residual(path);
    EXPECT_EQ(back.planes, r.planes);
    EXPECT_EQ(back.source_id, r.source_id);
    EXPECT_EQ(back.source_index, 42u);
    EXPECT_EQ(back.denoiser_hash, r.denoiser_hash);
    // A residual file is not a fingerprint file.
    EXPECT_EQ(code_of([&] { read_fingerprint(path); }), ErrorCode::FormatError);
    EXPECT_EQ(code_of([&] { read_residual((dir / "absent.gres").string()); }), ErrorCode::MissingFile);
    fs::remove_all(dir);
}

TEST(Container, RejectsCorruptInput) {
    const auto good = encode_fingerprint(sample_fingerprint());
    auto bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_EQ(code_of([&] { decode_fingerprint(bad_magic); }), ErrorCode::FormatError);
    auto bad_version = good;
    bad_version[4] = 2;
    EXPECT_EQ(code_of([&] { decode_fingerprint(bad_version); }), ErrorCode::FormatError);
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, good.size() - 1}) {
        const std::vector<std::uint8_t> truncated(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_EQ(code_of([&] { decode_fingerprint(truncated); }), ErrorCode::FormatError) << cut;
    }
    auto trailing = good;
    trailing.push_back(0);
    EXPECT_EQ(code_of([&] { decode_fingerprint(trailing); }), ErrorCode::FormatError);
    auto zero_count = good;
    zero_count[15] = zero_count[16] = 0;
    EXPECT_EQ(code_of([&] { decode_fingerprint(zero_count); }), ErrorCode::FormatError);
}

TEST(ImageIo, PngRoundTripIsLossless) {
    const auto dir = scratch_dir("png");
    for (std::size_t ch : {1u, 3u}) {
        const Image img = random_image(31, 17, ch, ch);
        const auto path = (dir / ("x" + std::to_string(ch) + ".png")).string();
        write_png(path, img);
        const Image back = read_image(path);
        ASSERT_EQ(back.shape(), img.shape());
        for (std::size_t c = 0; c < ch; ++c) EXPECT_EQ(back.plane(c), img.plane(c));
    }
    fs::remove_all(dir);
}

TEST(ImageIo, JpegQualityOrdering) {
    const Image img = random_image(64, 64, 3, 5);
    auto mse = [&](const Image& o) {
        double s = 0;
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < o.plane(c).size(); ++i)
                s += std::pow(double(o.plane(c).values()[i]) - img.plane(c).values()[i], 2);
        return s / (3.0 * 64 * 64);
    };
    const Image q100 = recompress_jpeg(img, 100), q50 = recompress_jpeg(img, 50);
    EXPECT_EQ(q100.shape(), img.shape());
    EXPECT_LT(mse(q100), mse(q50));
    EXPECT_EQ(code_of([&] { encode_jpeg(img, 0); }), ErrorCode::UnsupportedCodec);
    EXPECT_EQ(code_of([&] { encode_jpeg(img, 101); }), ErrorCode::UnsupportedCodec);
}

TEST(ImageIo, ReadsJpegFilesAndRejectsOtherBytes) {
    const auto dir = scratch_dir("jpg");
    const Image img = random_image(16, 8, 3, 6);
    write_jpeg((dir / "a.jpg").string(), img, 90);
    EXPECT_EQ(read_image((dir / "a.jpg").string()).shape(), img.shape());
    const std::string junk = "not an image";
    write_file_bytes((dir / "b.png").string(), std::span(reinterpret_cast<const std::uint8_t*>(junk.data()), junk.size()));
    EXPECT_EQ(code_of([&] { read_image((dir / "b.png").string()); }), ErrorCode::UnsupportedCodec);
    fs::remove_all(dir);
}

TEST(ImageIo, HeatmapWritesScaleSidecar) {
    const auto dir = scratch_dir("heat");
    const std::vector<double> v{-1.0, 0.0, 1.0, 3.0};
    const auto files = write_heatmap((dir / "h.png").string(), v, 2, 2);
    ASSERT_EQ(files.size(), 2u);
    const Image png = read_image(files[0]);
    EXPECT_EQ(png.plane(0), ImagePlane(2, 2, {0, 64, 128, 255}));
    const auto bytes = read_file_bytes(files[1]);
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    EXPECT_EQ(j["min"], -1.0);
    EXPECT_EQ(j["max"], 3.0);
    fs::remove_all(dir);
}

TEST(KeyValue, SectionsQuotesAndComments) {
    const auto doc = parse_key_values("a = 1 # note\n\n[[source]]\nlabel = \"x # y\"\nimage = p\nimage = q\n[group]\n");
    ASSERT_EQ(doc.sections.size(), 3u);
    EXPECT_EQ(doc.root().get("a"), "1");
    EXPECT_EQ(doc.sections[1].name, "source");
    EXPECT_EQ(doc.sections[1].get("label"), "x # y");
    EXPECT_EQ(doc.sections[1].all("image"), (std::vector<std::string>{"p", "q"}));
    EXPECT_EQ(doc.named("group").size(), 1u);
    EXPECT_EQ(code_of([] { parse_key_values("just words\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse_key_values("[open\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse_key_values(" = 3\n"); }), ErrorCode::ParseError);
}

TEST(KeyValue, ScalarsAndLists) {
    EXPECT_EQ(parse_real("k", "2.5"), 2.5);
    EXPECT_EQ(parse_integer<int>("k", "-7"), -7);
    EXPECT_EQ(code_of([] { parse_real("k", "2.5x"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { parse_integer<unsigned>("k", "1.0"); }), ErrorCode::ParseError);
    EXPECT_EQ(split_list(" 3, 5 ,7,"), (std::vector<std::string>{"3", "5", "7"}));
    for (double v : {0.1, 1.0 / 3.0, -2e-300, 12345.678})
        EXPECT_EQ(parse_real("k", format_real(v)), v);
}

TEST(Report, CorrMatrixCsvAndJson) {
    const CorrMatrix m{{"A", "B,1"}, {"A", "B,1"}, {{0.5, 0.25}, {-0.125, 1.0}}};
    EXPECT_EQ(to_csv(m), "residual_set,A,\"B,1\"\nA,0.5,0.25\n\"B,1\",-0.125,1\n");
    const auto j = to_json(m);
    EXPECT_EQ(j["values"][1][0], -0.125);
    EXPECT_EQ(j["col_labels"][1], "B,1");
}

TEST(Report, ConfusionCsvAndJson) {
    ConfusionMatrix m;
    m.labels = {"A", "B"};
    m.counts = {{199, 1}, {0, 50}};
    EXPECT_EQ(to_csv(m), "true\\predicted,A,B\nA,199,1\nB,0,50\n");
    const auto j = to_json(m);
    EXPECT_TRUE(j["display"][0][1].is_null());  // 0.005 is under the display threshold
    EXPECT_EQ(j["display"][0][0], 0.995);
    EXPECT_EQ(j["correct"], 249);
    EXPECT_EQ(j["accuracy"], 249.0 / 250.0);
}

TEST(Report, RocCsv) {
    const auto c = roc({{0.9}, {0.1}});
    EXPECT_EQ(to_csv(c), "fpr,tpr\n0,0\n0,1\n1,1\n");
    EXPECT_EQ(to_json(c)["auc"], 1.0);
}
