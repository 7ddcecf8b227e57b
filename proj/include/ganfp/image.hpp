#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ganfp/error.hpp"
#include "ganfp/reduce.hpp"

namespace ganfp {

/// One channel of an image: row-major, width * height samples.
class ImagePlane {
public:
    ImagePlane() = default;

    ImagePlane(std::size_t width, std::size_t height, float fill = 0.0f)
        : width_(width), height_(height), data_(width * height, fill) {
        check_dims();
    }

    ImagePlane(std::size_t width, std::size_t height, std::vector<float> data)
        : width_(width), height_(height), data_(std::move(data)) {
        check_dims();
        if (data_.size() != width_ * height_)
            fail(ErrorCode::LengthMismatch, "plane data length " + std::to_string(data_.size()) +
                                                " != " + std::to_string(width_ * height_));
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }

    float operator()(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }
    float& operator()(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }

    std::span<const float> values() const noexcept { return data_; }
    std::span<float> values() noexcept { return data_; }

    bool operator==(const ImagePlane&) const = default;

private:
    void check_dims() const {
        if (width_ < 1 || height_ < 1) fail(ErrorCode::TooSmall, "plane dimensions must be >= 1");
    }

    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<float> data_;
};

struct Shape {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;

    std::size_t count() const noexcept { return width * height * channels; }
    bool operator==(const Shape&) const = default;
};

inline std::string to_string(const Shape& s) {
    return std::to_string(s.width) + "x" + std::to_string(s.height) + "x" + std::to_string(s.channels);
}

struct ValueRange {
    double lo = 0.0;
    double hi = 255.0;
    bool operator==(const ValueRange&) const = default;
};

/// Shape of a stack of equally sized planes (the common currency of images,
/// residuals and fingerprints).
inline Shape shape_of(std::span<const ImagePlane> planes) {
    if (planes.empty()) return {};
    return {planes.front().width(), planes.front().height(), planes.size()};
}

inline void check_plane_stack(std::span<const ImagePlane> planes) {
    if (planes.empty()) fail(ErrorCode::ShapeMismatch, "no planes");
    for (const auto& p : planes)
        if (p.width() != planes.front().width() || p.height() != planes.front().height())
            fail(ErrorCode::ShapeMismatch, "planes differ in size");
}

/// Grayscale (1 plane) or RGB (3 planes) image in real-valued intensities.
class Image {
public:
    Image() = default;

    explicit Image(std::vector<ImagePlane> planes, ValueRange range = {})
        : planes_(std::move(planes)), range_(range) {
        if (planes_.size() != 1 && planes_.size() != 3)
            fail(ErrorCode::ShapeMismatch, "image must have 1 or 3 planes, got " +
                                               std::to_string(planes_.size()));
        check_plane_stack(planes_);
    }

    Image(std::size_t width, std::size_t height, std::size_t channels, float fill = 0.0f)
        : Image(std::vector<ImagePlane>(channels, ImagePlane(width, height, fill))) {}

    std::size_t width() const noexcept { return planes_.empty() ? 0 : planes_[0].width(); }
    std::size_t height() const noexcept { return planes_.empty() ? 0 : planes_[0].height(); }
    std::size_t channels() const noexcept { return planes_.size(); }
    Shape shape() const noexcept { return shape_of(planes_); }
    ValueRange range() const noexcept { return range_; }

    const ImagePlane& plane(std::size_t c) const { return planes_.at(c); }
    ImagePlane& plane(std::size_t c) { return planes_.at(c); }
    std::span<const ImagePlane> planes() const noexcept { return planes_; }

    bool operator==(const Image&) const = default;

private:
    std::vector<ImagePlane> planes_;
    ValueRange range_;
};

/// Channel-major, row-major concatenation of all planes.
struct FlatVector {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const noexcept { return values[i]; }
    bool operator==(const FlatVector&) const = default;
};

inline FlatVector flatten(std::span<const ImagePlane> planes) {
    FlatVector out;
    std::size_t total = 0;
    for (const auto& p : planes) total += p.size();
    out.values.reserve(total);
    for (const auto& p : planes)
        for (float v : p.values()) out.values.push_back(v);
    return out;
}

inline FlatVector flatten(const Image& image) { return flatten(image.planes()); }

inline std::vector<ImagePlane> unflatten_planes(const FlatVector& v, Shape shape) {
    if (v.size() != shape.count())
        fail(ErrorCode::LengthMismatch, "vector length " + std::to_string(v.size()) +
                                            " does not match shape " + to_string(shape));
    std::vector<ImagePlane> planes;
    const std::size_t n = shape.width * shape.height;
    for (std::size_t c = 0; c < shape.channels; ++c) {
        std::vector<float> data(n);
        for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(v.values[c * n + i]);
        planes.emplace_back(shape.width, shape.height, std::move(data));
    }
    return planes;
}

inline Image unflatten(const FlatVector& v, Shape shape) {
    return Image(unflatten_planes(v, shape));
}

inline double inner_product(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        fail(ErrorCode::LengthMismatch, "inner product of vectors with lengths " +
                                            std::to_string(a.size()) + " and " + std::to_string(b.size()));
    return pairwise_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

inline double inner_product(const FlatVector& a, const FlatVector& b) {
    return inner_product(std::span<const double>(a.values), std::span<const double>(b.values));
}

inline FlatVector zero_mean_unit_norm(const FlatVector& v) {
    const auto& x = v.values;
    if (x.size() < 2 || std::all_of(x.begin(), x.end(), [&](double e) { return e == x.front(); }))
        fail(ErrorCode::ConstantInput, "cannot normalize a constant vector");
    const double mean = mean_of(std::span<const double>(x));
    FlatVector out{std::vector<double>(x.size())};
    for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = x[i] - mean;
    const double norm = std::sqrt(inner_product(out, out));
    if (!(norm > 0.0)) fail(ErrorCode::ConstantInput, "centered vector has zero norm");
    for (double& e : out.values) e /= norm;
    return out;
}

}  // namespace ganfp
