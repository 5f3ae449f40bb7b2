// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>

#include "morphology.hpp"
#include "volume.hpp"

namespace tubetopo {

struct SkeletonOptions {
    /// Upper bound on erosion-loop iterations. Unset means
    /// ceil(max extent / 2) + 1, which is never reached for finite inputs.
    std::optional<std::size_t> max_iter;
    StructuringElement erode = StructuringElement::cross;
    StructuringElement dilate = StructuringElement::cube;
};

template <typename T>
struct SkeletonResult {
    Volume<T> skeleton;
    Volume<T> unclosed; // accumulator before the final closing
    std::size_t iterations = 0;
    bool converged = false;
};

inline std::size_t default_skeleton_iterations(const Shape& s) { return (s.max_extent() + 1) / 2 + 1; }

/// Iterated min/max-pooling skeleton, run until the eroded volume is empty.
///
/// Each step keeps the part of the current erosion that an opening removes,
/// ReLU(I - maxpool(minpool(I))), and adds it to the accumulator through a
/// (1 - CL) gate so values stay in [0,1]. A final closing reconnects the
/// result. Binary input gives a binary skeleton.
template <typename T>
SkeletonResult<T> soft_skeleton_run(const Volume<T>& input, const SkeletonOptions& opt = {})
{
    static_assert(std::is_floating_point_v<T>, "soft_skeleton works on floating-point volumes");
    require_probability(input, "soft_skeleton");

    const std::size_t limit = opt.max_iter.value_or(default_skeleton_iterations(input.shape()));
    const bool binary = is_binary(input);
    auto exhausted = [binary](const Volume<T>& v) {
        const double s = sum(v);
        return binary ? s == 0.0 : s < 1e-6;
    };

    const std::size_t n = input.size();
    Volume<T> eroded = minpool(input, opt.erode);
    Volume<T> opened = maxpool(eroded, opt.dilate);
    Volume<T> cl(input.shape());
    for (std::size_t i = 0; i < n; ++i)
        cl[i] = std::max(T(0), input[i] - opened[i]);

    SkeletonResult<T> r;
    Volume<T> cur = std::move(eroded);
    while (!exhausted(cur)) {
        if (r.iterations == limit)
            break;
        Volume<T> next = minpool(cur, opt.erode);
        opened = maxpool(next, opt.dilate);
        for (std::size_t i = 0; i < n; ++i) {
            const T delta = std::max(T(0), cur[i] - opened[i]);
            cl[i] += std::max(T(0), (T(1) - cl[i]) * delta);
        }
        cur = std::move(next);
        ++r.iterations;
    }
    r.converged = exhausted(cur);
    r.skeleton = minpool(maxpool(cl, opt.dilate), opt.erode);
    r.unclosed = std::move(cl);
    return r;
}

template <typename T>
Volume<T> soft_skeleton(const Volume<T>& input, const SkeletonOptions& opt = {})
{
    return soft_skeleton_run(input, opt).skeleton;
}

template <typename T>
LabelVolume binarize_skeleton(const Volume<T>& skel, double t = 0.5)
{
    if (!(t > 0.0 && t < 1.0))
        throw ValidationError("skeleton threshold must lie in (0,1)");
    return threshold(skel, t);
}

} // namespace tubetopo
