// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>

#include "error.hpp"
#include "volume.hpp"

namespace tubetopo {

enum class PoolMode { mean, max };

template <typename T>
struct Downscaled {
    Volume<T> volume;
    // Zero voxels appended to y and x before pooling.
    std::size_t pad_y = 0;
    std::size_t pad_x = 0;
};

/// Aggregates factor x factor windows in (y, x); z is untouched. Extents that
/// are not multiples of factor are zero-padded up to the next multiple.
/// Use mean for intensities and max for binary labels, which keeps
/// thin structures alive.
template <typename T>
Downscaled<T> downscale_xy(const Volume<T>& v, std::size_t factor, PoolMode mode)
{
    if (factor == 0)
        throw ValidationError("downscale factor must be positive");
    const Shape& in = v.shape();
    const std::size_t oy = (in.y + factor - 1) / factor;
    const std::size_t ox = (in.x + factor - 1) / factor;
    Downscaled<T> r{Volume<T>(Shape{in.z, oy, ox}), oy * factor - in.y, ox * factor - in.x};
    const double window = static_cast<double>(factor * factor);

    for (std::size_t z = 0; z < in.z; ++z)
        for (std::size_t y = 0; y < oy; ++y)
            for (std::size_t x = 0; x < ox; ++x) {
                double acc = 0.0;
                for (std::size_t dy = 0; dy < factor; ++dy) {
                    const std::size_t sy = y * factor + dy;
                    if (sy >= in.y)
                        break;
                    for (std::size_t dx = 0; dx < factor; ++dx) {
                        const std::size_t sx = x * factor + dx;
                        if (sx >= in.x)
                            break;
                        const double val = static_cast<double>(v.at(z, sy, sx));
                        acc = mode == PoolMode::max ? std::max(acc, val) : acc + val;
                    }
                }
                r.volume.at(z, y, x) = static_cast<T>(mode == PoolMode::max ? acc : acc / window);
            }
    return r;
}

template <typename T>
Volume<T> upscale_xy_nearest(const Volume<T>& v, std::size_t factor)
{
    if (factor == 0)
        throw ValidationError("upscale factor must be positive");
    const Shape& in = v.shape();
    Volume<T> out(Shape{in.z, in.y * factor, in.x * factor});
    for (std::size_t z = 0; z < in.z; ++z)
        for (std::size_t y = 0; y < in.y * factor; ++y)
            for (std::size_t x = 0; x < in.x * factor; ++x)
                out.at(z, y, x) = v.at(z, y / factor, x / factor);
    return out;
}

/// Drops trailing y/x voxels so the volume matches `target` again after an
/// upscale of a padded downscale.
template <typename T>
Volume<T> crop_to(const Volume<T>& v, const Shape& target)
{
    const Shape& in = v.shape();
    if (target.z != in.z || target.y > in.y || target.x > in.x)
        throw ValidationError("crop target " + to_string(target) + " exceeds " + to_string(in));
    Volume<T> out(target);
    for (std::size_t z = 0; z < target.z; ++z)
        for (std::size_t y = 0; y < target.y; ++y)
            for (std::size_t x = 0; x < target.x; ++x)
                out.at(z, y, x) = v.at(z, y, x);
    return out;
}

} // namespace tubetopo
