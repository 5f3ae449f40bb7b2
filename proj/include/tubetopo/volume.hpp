// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "error.hpp"

namespace tubetopo {

/// Voxel extents in (z, y, x) order. Storage is row-major with x fastest.
/// A 2D image is a volume with z == 1; axes of extent 1 take no part in
/// neighbourhoods (see Shape::active).
struct Shape {
    std::size_t z = 0;
    std::size_t y = 0;
    std::size_t x = 0;

    constexpr std::size_t size() const { return z * y * x; }
    constexpr std::size_t operator[](int axis) const { return axis == 0 ? z : axis == 1 ? y : x; }
    constexpr bool active(int axis) const { return (*this)[axis] > 1; }
    constexpr std::size_t max_extent() const { return std::max(z, std::max(y, x)); }
    constexpr std::size_t index(std::size_t iz, std::size_t iy, std::size_t ix) const
    {
        return (iz * y + iy) * x + ix;
    }
    constexpr std::array<std::size_t, 3> coord(std::size_t i) const
    {
        return {i / (y * x), (i / x) % y, i % x};
    }
    constexpr bool on_border(std::size_t iz, std::size_t iy, std::size_t ix) const
    {
        return (active(0) && (iz == 0 || iz + 1 == z)) || (active(1) && (iy == 0 || iy + 1 == y)) ||
               (active(2) && (ix == 0 || ix + 1 == x));
    }
    friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s)
{
    std::ostringstream os;
    os << s.z << "x" << s.y << "x" << s.x;
    return os.str();
}

/// Physical voxel step per axis, micrometres. No default: callers always
/// state the spacing of their data.
struct Spacing {
    double z;
    double y;
    double x;

    constexpr double operator[](int axis) const { return axis == 0 ? z : axis == 1 ? y : x; }
    bool valid() const
    {
        return std::isfinite(z) && std::isfinite(y) && std::isfinite(x) && z > 0 && y > 0 && x > 0;
    }
    friend constexpr bool operator==(const Spacing&, const Spacing&) = default;
};

inline constexpr Spacing unit_spacing{1.0, 1.0, 1.0};

template <typename T>
class Volume {
public:
    using value_type = T;

    Volume() = default;
    explicit Volume(Shape shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {}
    Volume(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data))
    {
        if (data_.size() != shape_.size())
            throw ValidationError("volume data length " + std::to_string(data_.size()) +
                                  " does not match shape " + to_string(shape_));
    }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& at(std::size_t z, std::size_t y, std::size_t x) { return data_[shape_.index(z, y, x)]; }
    const T& at(std::size_t z, std::size_t y, std::size_t x) const { return data_[shape_.index(z, y, x)]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    const std::vector<T>& raw() const { return data_; }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    friend bool operator==(const Volume&, const Volume&) = default;

private:
    Shape shape_{};
    std::vector<T> data_;
};

using LabelVolume = Volume<std::uint8_t>;
using ProbVolume = Volume<float>;

template <typename To, typename From>
Volume<To> volume_cast(const Volume<From>& v)
{
    Volume<To> out(v.shape());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<To>(v[i]);
    return out;
}

template <typename A, typename B>
void require_same_shape(const Volume<A>& a, const Volume<B>& b, const char* what)
{
    if (a.shape() != b.shape())
        throw ValidationError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                              to_string(b.shape()));
}

template <typename T>
bool is_binary(const Volume<T>& v)
{
    for (const T& x : v)
        if (!(x == T(0) || x == T(1)))
            return false;
    return true;
}

template <typename T>
bool is_probability(const Volume<T>& v)
{
    for (const T& x : v)
        if (!(x >= T(0) && x <= T(1)))
            return false;
    return true;
}

template <typename T>
void require_binary(const Volume<T>& v, const char* what)
{
    if (!is_binary(v))
        throw ValidationError(std::string(what) + ": expected a binary {0,1} volume");
}

template <typename T>
void require_probability(const Volume<T>& v, const char* what)
{
    if (!is_probability(v))
        throw ValidationError(std::string(what) + ": values must lie in [0,1]");
}

/// Strict threshold: voxel is foreground iff value > threshold.
template <typename T>
LabelVolume threshold(const Volume<T>& v, double t)
{
    LabelVolume out(v.shape());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<double>(v[i]) > t ? 1 : 0;
    return out;
}

template <typename T>
double sum(const Volume<T>& v)
{
    double s = 0.0;
    for (const T& x : v)
        s += static_cast<double>(x);
    return s;
}

template <typename T>
std::size_t count_nonzero(const Volume<T>& v)
{
    std::size_t n = 0;
    for (const T& x : v)
        n += x != T(0);
    return n;
}

} // namespace tubetopo
