#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "blockprnu/error.hpp"

namespace blockprnu {

// Row-major 2-D sample array.
template <typename T>
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
        if (width < 0 || height < 0) fail(ErrorKind::DimensionMismatch, "negative plane size");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::span<T> row(int y) noexcept { return {data_.data() + index(0, y), static_cast<std::size_t>(width_)}; }
    std::span<const T> row(int y) const noexcept {
        return {data_.data() + index(0, y), static_cast<std::size_t>(width_)};
    }

    template <typename U>
    bool same_shape(const Plane<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Plane&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

template <typename A, typename B>
void require_same_shape(const Plane<A>& a, const Plane<B>& b, const char* what) {
    if (!a.same_shape(b)) {
        fail(ErrorKind::DimensionMismatch, std::string(what) + ": " + std::to_string(a.width()) + "x" +
                                               std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                               "x" + std::to_string(b.height()));
    }
}

// Luma plane of one decoded frame.
struct Picture {
    Plane<std::uint8_t> luma;
    int frame_idx = 0;

    int width() const noexcept { return luma.width(); }
    int height() const noexcept { return luma.height(); }
};

// Noise residual W of a picture. `degenerate` marks a constant input picture.
struct NoiseResidual {
    Plane<double> values;
    bool degenerate = false;
};

// Per-pixel weighting mask M.
using Mask = Plane<double>;

}  // namespace blockprnu
