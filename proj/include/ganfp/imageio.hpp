#pragma once

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include <json.hpp>

#include "ganfp/container.hpp"
#include "ganfp/error.hpp"
#include "ganfp/image.hpp"
#include "ganfp/keyvalue.hpp"

namespace ganfp {

// 8-bit grayscale/RGB raster I/O: PNG (lossless) and baseline JPEG (lossy).
// Samples are converted to float once on load; on save they are rounded and
// clamped to [0, 255].

inline std::uint8_t to_u8(float v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

/// Interleaved 8-bit samples of an image (RGBRGB... or gray).
inline std::vector<std::uint8_t> interleave_u8(const Image& image) {
    const std::size_t n = image.width() * image.height(), ch = image.channels();
    std::vector<std::uint8_t> out(n * ch);
    for (std::size_t c = 0; c < ch; ++c) {
        const auto v = image.plane(c).values();
        for (std::size_t i = 0; i < n; ++i) out[i * ch + c] = to_u8(v[i]);
    }
    return out;
}

inline Image deinterleave_u8(std::span<const std::uint8_t> px, std::size_t width, std::size_t height,
                             std::size_t channels) {
    std::vector<ImagePlane> planes;
    const std::size_t n = width * height;
    for (std::size_t c = 0; c < channels; ++c) {
        std::vector<float> data(n);
        for (std::size_t i = 0; i < n; ++i) data[i] = px[i * channels + c];
        planes.emplace_back(width, height, std::move(data));
    }
    return Image(std::move(planes));
}

inline Image decode_png(std::span<const std::uint8_t> bytes, const std::string& origin) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
        fail(ErrorCode::FormatError, origin + ": " + img.message);
    const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
    img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const std::size_t channels = color ? 3 : 1;
    std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, px.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        fail(ErrorCode::FormatError, origin + ": " + msg);
    }
    return deinterleave_u8(px, img.width, img.height, channels);
}

inline std::vector<std::uint8_t> encode_png(std::span<const std::uint8_t> px, std::size_t width, std::size_t height,
                                            std::size_t channels) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(width);
    img.height = static_cast<png_uint_32>(height);
    img.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, px.data(), 0, nullptr))
        fail(ErrorCode::IoError, std::string("PNG encode: ") + img.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, px.data(), 0, nullptr))
        fail(ErrorCode::IoError, std::string("PNG encode: ") + img.message);
    out.resize(size);
    return out;
}

namespace detail {

struct JpegErrorManager {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

struct RawJpeg {
    unsigned char* pixels = nullptr;  // malloc'd, interleaved
    std::size_t width = 0, height = 0, channels = 0;
};

// Plain-C decoding body: nothing with a destructor lives across setjmp.
inline bool decode_jpeg_raw(const std::uint8_t* data, std::size_t size, RawJpeg* out, JpegErrorManager* err) {
    jpeg_decompress_struct cinfo{};
    cinfo.err = jpeg_std_error(&err->pub);
    err->pub.error_exit = jpeg_error_exit;
    if (setjmp(err->jump)) {
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, data, static_cast<unsigned long>(size));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    out->width = cinfo.output_width;
    out->height = cinfo.output_height;
    out->channels = static_cast<std::size_t>(cinfo.output_components);
    const std::size_t stride = out->width * out->channels;
    out->pixels = static_cast<unsigned char*>(std::malloc(stride * out->height));
    if (out->pixels == nullptr) std::longjmp(err->jump, 1);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out->pixels + static_cast<std::size_t>(cinfo.output_scanline) * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

}  // namespace detail

inline Image decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& origin) {
    detail::RawJpeg raw;
    detail::JpegErrorManager err{};
    const bool ok = detail::decode_jpeg_raw(bytes.data(), bytes.size(), &raw, &err);
    if (!ok) {
        std::free(raw.pixels);
        fail(ErrorCode::FormatError, origin + ": " + err.message);
    }
    const std::span<const std::uint8_t> px(raw.pixels, raw.width * raw.height * raw.channels);
    Image image = deinterleave_u8(px, raw.width, raw.height, raw.channels);
    std::free(raw.pixels);
    return image;
}

/// Baseline JPEG at the given quality, without chroma subsampling.
inline std::vector<std::uint8_t> encode_jpeg(const Image& image, int quality) {
    if (quality < 1 || quality > 100)
        fail(ErrorCode::UnsupportedCodec, "JPEG quality must be in [1, 100], got " + std::to_string(quality));
    const auto px = interleave_u8(image);
    jpeg_compress_struct cinfo{};
    detail::JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = detail::jpeg_error_exit;
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        fail(ErrorCode::IoError, std::string("JPEG encode: ") + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = static_cast<JDIMENSION>(image.width());
    cinfo.image_height = static_cast<JDIMENSION>(image.height());
    cinfo.input_components = static_cast<int>(image.channels());
    cinfo.in_color_space = image.channels() == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    for (int c = 0; c < cinfo.num_components; ++c) {
        cinfo.comp_info[c].h_samp_factor = 1;
        cinfo.comp_info[c].v_samp_factor = 1;
    }
    jpeg_start_compress(&cinfo, TRUE);
    const std::size_t stride = image.width() * image.channels();
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<std::uint8_t*>(px.data()) + static_cast<std::size_t>(cinfo.next_scanline) * stride;
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<std::uint8_t> out(buffer, buffer + size);
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    return out;
}

/// Encode-decode round trip through JPEG at `quality`.
inline Image recompress_jpeg(const Image& image, int quality) {
    return decode_jpeg(encode_jpeg(image, quality), "<recompressed>");
}

inline Image read_image(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    static constexpr std::uint8_t kPngSig[] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::equal(kPngSig, kPngSig + 4, bytes.begin())) return decode_png(bytes, path);
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return decode_jpeg(bytes, path);
    fail(ErrorCode::UnsupportedCodec, path + ": not a PNG or JPEG file");
}

inline void write_png(const std::string& path, const Image& image) {
    if (image.channels() != 1 && image.channels() != 3)
        fail(ErrorCode::UnsupportedCodec, "PNG output supports 1 or 3 channels");
    write_file_bytes(path, encode_png(interleave_u8(image), image.width(), image.height(), image.channels()));
}

inline void write_jpeg(const std::string& path, const Image& image, int quality) {
    write_file_bytes(path, encode_jpeg(image, quality));
}

/// Min-max scaled 8-bit grayscale rendering of a real array, plus a
/// `<name>.scale.json` sidecar recording the mapping.
inline std::vector<std::string> write_heatmap(const std::string& png_path, std::span<const double> values,
                                              std::size_t width, std::size_t height) {
    if (values.size() != width * height) fail(ErrorCode::LengthMismatch, "heatmap size mismatch");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<std::uint8_t> px(values.size(), 0);
    if (hi > lo)
        for (std::size_t i = 0; i < values.size(); ++i)
            px[i] = static_cast<std::uint8_t>(std::lround(255.0 * (values[i] - lo) / (hi - lo)));
    write_file_bytes(png_path, encode_png(px, width, height, 1));

    const auto sidecar = std::filesystem::path(png_path).replace_extension(".scale.json").string();
    nlohmann::ordered_json j;
    j["min"] = lo;
    j["max"] = hi;
    j["mapping"] = "pixel = round(255 * (value - min) / (max - min)); all zero when max == min";
    const std::string text = j.dump(2) + "\n";
    write_file_bytes(sidecar, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return {png_path, sidecar};
}

}  // namespace ganfp
