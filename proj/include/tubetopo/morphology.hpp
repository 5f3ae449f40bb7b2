// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>

#include "parallel.hpp"
#include "volume.hpp"

namespace tubetopo {

/// Radius-1 structuring elements. `cross` is the centre plus its face
/// neighbours, `cube` the full 3^d window. Only axes with extent > 1 count.
enum class StructuringElement { cross, cube };

namespace detail {

struct AxisStep {
    std::size_t stride;
    std::size_t extent;
};

inline std::array<AxisStep, 3> axis_steps(const Shape& s)
{
    return {AxisStep{s.y * s.x, s.z}, AxisStep{s.x, s.y}, AxisStep{1, s.x}};
}

// Position of voxel i along one axis.
inline std::size_t axis_pos(std::size_t i, const AxisStep& a) { return (i / a.stride) % a.extent; }

template <typename T, typename Op>
Volume<T> cross_pool(const Volume<T>& v, Op op)
{
    const Shape& s = v.shape();
    const auto steps = axis_steps(s);
    Volume<T> out(s);
    const std::size_t rows = s.z * s.y;
    parallel_for(0, rows, [&](std::size_t row) {
        const std::size_t base = row * s.x;
        for (std::size_t xi = 0; xi < s.x; ++xi) {
            const std::size_t i = base + xi;
            T acc = v[i];
            for (int a = 0; a < 3; ++a) {
                if (!s.active(a))
                    continue;
                const AxisStep& st = steps[a];
                const std::size_t p = axis_pos(i, st);
                acc = op(acc, p > 0 ? v[i - st.stride] : T(0));
                acc = op(acc, p + 1 < st.extent ? v[i + st.stride] : T(0));
            }
            out[i] = acc;
        }
    });
    return out;
}

// One 3-wide pass along `axis`; the composition over all active axes equals
// the direct 3^d window with zero padding, because min and max are exact.
template <typename T, typename Op>
Volume<T> line_pool(const Volume<T>& v, int axis, Op op)
{
    const Shape& s = v.shape();
    const AxisStep st = axis_steps(s)[axis];
    Volume<T> out(s);
    const std::size_t rows = s.z * s.y;
    parallel_for(0, rows, [&](std::size_t row) {
        const std::size_t base = row * s.x;
        for (std::size_t xi = 0; xi < s.x; ++xi) {
            const std::size_t i = base + xi;
            const std::size_t p = axis_pos(i, st);
            T acc = v[i];
            acc = op(acc, p > 0 ? v[i - st.stride] : T(0));
            acc = op(acc, p + 1 < st.extent ? v[i + st.stride] : T(0));
            out[i] = acc;
        }
    });
    return out;
}

template <typename T, typename Op>
Volume<T> pool(const Volume<T>& v, StructuringElement se, Op op)
{
    if (se == StructuringElement::cross)
        return cross_pool(v, op);
    Volume<T> cur = v;
    for (int a = 0; a < 3; ++a)
        if (v.shape().active(a))
            cur = line_pool(cur, a, op);
    return cur;
}

struct MinOp {
    template <typename T>
    T operator()(T a, T b) const { return b < a ? b : a; }
};
struct MaxOp {
    template <typename T>
    T operator()(T a, T b) const { return a < b ? b : a; }
};

} // namespace detail

/// Soft erosion: neighbourhood minimum, outside the image counts as 0.
template <typename T>
Volume<T> minpool(const Volume<T>& v, StructuringElement se = StructuringElement::cross)
{
    return detail::pool(v, se, detail::MinOp{});
}

/// Soft dilation: neighbourhood maximum, outside the image counts as 0.
template <typename T>
Volume<T> maxpool(const Volume<T>& v, StructuringElement se = StructuringElement::cube)
{
    return detail::pool(v, se, detail::MaxOp{});
}

template <typename T>
Volume<T> binary_dilate(const Volume<T>& v, StructuringElement se = StructuringElement::cross)
{
    require_binary(v, "binary_dilate");
    return maxpool(v, se);
}

} // namespace tubetopo
