#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ganfp/denoise.hpp"
#include "ganfp/error.hpp"
#include "ganfp/fingerprint.hpp"

namespace ganfp {

// Plane-stack container, little-endian throughout:
//
//   magic        4 bytes   "GFPR" (fingerprint) or "GRES" (residual)
//   version      u16       1
//   width        u32
//   height       u32
//   channels     u8
//   count        u32       n_residuals for fingerprints, source image index for residuals
//   denoiser     32 bytes  SHA-256 of the canonical denoiser config
//   label_len    u16
//   label        label_len bytes of UTF-8
//   samples      width*height*channels IEEE-754 binary32, channel-major, row-major

inline constexpr std::string_view kFingerprintMagic = "GFPR";
inline constexpr std::string_view kResidualMagic = "GRES";
inline constexpr std::uint16_t kContainerVersion = 1;

struct PlaneContainer {
    std::string magic;
    std::vector<ImagePlane> planes;
    std::uint32_t count = 0;
    Digest denoiser_hash{};
    std::string label;
};

namespace detail {

class ByteWriter {
public:
    void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    float f32() { return std::bit_cast<float>(u32()); }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) fail(ErrorCode::FormatError, "container truncated");
    }
    std::uint64_t le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_container(const PlaneContainer& c) {
    if (c.magic.size() != 4) fail(ErrorCode::FormatError, "magic must be 4 bytes");
    check_plane_stack(c.planes);
    const Shape s = shape_of(c.planes);
    if (s.channels > 255) fail(ErrorCode::FormatError, "too many channels");
    if (s.width > UINT32_MAX || s.height > UINT32_MAX) fail(ErrorCode::FormatError, "plane too large");
    if (c.label.size() > UINT16_MAX) fail(ErrorCode::FormatError, "label too long");

    detail::ByteWriter w;
    w.bytes(c.magic);
    w.u16(kContainerVersion);
    w.u32(static_cast<std::uint32_t>(s.width));
    w.u32(static_cast<std::uint32_t>(s.height));
    w.u8(static_cast<std::uint8_t>(s.channels));
    w.u32(c.count);
    w.bytes(std::string_view(reinterpret_cast<const char*>(c.denoiser_hash.data()), c.denoiser_hash.size()));
    w.u16(static_cast<std::uint16_t>(c.label.size()));
    w.bytes(c.label);
    for (const auto& p : c.planes)
        for (float v : p.values()) w.f32(v);
    return w.take();
}

inline PlaneContainer decode_container(std::span<const std::uint8_t> bytes, std::string_view expected_magic) {
    detail::ByteReader r(bytes);
    PlaneContainer c;
    c.magic = r.bytes(4);
    if (c.magic != expected_magic)
        fail(ErrorCode::FormatError, "bad magic '" + c.magic + "', expected '" + std::string(expected_magic) + "'");
    const auto version = r.u16();
    if (version != kContainerVersion) fail(ErrorCode::FormatError, "unsupported version " + std::to_string(version));
    const std::size_t width = r.u32(), height = r.u32(), channels = r.u8();
    if (width == 0 || height == 0 || channels == 0) fail(ErrorCode::FormatError, "empty plane stack");
    c.count = r.u32();
    const std::string hash = r.bytes(c.denoiser_hash.size());
    std::memcpy(c.denoiser_hash.data(), hash.data(), hash.size());
    c.label = r.bytes(r.u16());
    const std::size_t n = width * height;
    if (r.remaining() != n * channels * 4)
        fail(ErrorCode::FormatError, "sample payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                                         std::to_string(n * channels * 4));
    for (std::size_t ch = 0; ch < channels; ++ch) {
        std::vector<float> data(n);
        for (auto& v : data) v = r.f32();
        c.planes.emplace_back(width, height, std::move(data));
    }
    return c;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::MissingFile, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoError, "short write to " + path);
}

inline std::vector<std::uint8_t> encode_fingerprint(const Fingerprint& fp) {
    return encode_container({std::string(kFingerprintMagic), fp.planes, fp.n_residuals, fp.denoiser_hash,
                             fp.source_label});
}

inline Fingerprint decode_fingerprint(std::span<const std::uint8_t> bytes) {
    auto c = decode_container(bytes, kFingerprintMagic);
    if (c.count == 0) fail(ErrorCode::FormatError, "fingerprint with n_residuals == 0");
    return {std::move(c.planes), c.count, std::move(c.label), c.denoiser_hash};
}

inline std::vector<std::uint8_t> encode_residual(const Residual& r) {
    return encode_container({std::string(kResidualMagic), r.planes, r.source_index, r.denoiser_hash, r.source_id});
}

inline Residual decode_residual(std::span<const std::uint8_t> bytes) {
    auto c = decode_container(bytes, kResidualMagic);
    return {std::move(c.planes), std::move(c.label), c.count, c.denoiser_hash};
}

inline void write_fingerprint(const std::string& path, const Fingerprint& fp) {
    write_file_bytes(path, encode_fingerprint(fp));
}
inline Fingerprint read_fingerprint(const std::string& path) { return decode_fingerprint(read_file_bytes(path)); }

inline void write_residual(const std::string& path, const Residual& r) { write_file_bytes(path, encode_residual(r)); }
inline Residual read_residual(const std::string& path) { return decode_residual(read_file_bytes(path)); }

}  // namespace ganfp
