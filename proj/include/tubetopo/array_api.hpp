// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Flat-buffer entry points for foreign-language wrappers. Buffers are
// contiguous (z, y, x) row-major arrays; predictions are f32 in [0,1] and
// labels u8 in {0,1}. Inputs are copied, never retained, and every failure
// is reported as an exception derived from std::exception.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "losses.hpp"
#include "metrics.hpp"
#include "names.hpp"
#include "report.hpp"
#include "skeleton.hpp"

namespace tubetopo::api {

template <typename T>
Volume<T> wrap(std::span<const T> data, const Shape& shape, const char* what)
{
    if (data.size() != shape.size())
        throw ValidationError(std::string(what) + ": buffer holds " + std::to_string(data.size()) +
                              " elements, shape " + to_string(shape) + " needs " + std::to_string(shape.size()));
    return Volume<T>(shape, std::vector<T>(data.begin(), data.end()));
}

inline LossValue negative_centerline(std::span<const float> pred, const Shape& pred_shape,
                                     std::span<const std::uint8_t> label, const Shape& label_shape)
{
    return tubetopo::negative_centerline(wrap(pred, pred_shape, "pred"), wrap(label, label_shape, "label"));
}

inline TopologyLossValue simplified_topology(std::span<const float> pred, const Shape& pred_shape,
                                             std::span<const std::uint8_t> label, const Shape& label_shape,
                                             std::string_view mode)
{
    RegionOptions opt;
    opt.mode = parse_region_mode(mode);
    return tubetopo::simplified_topology(wrap(pred, pred_shape, "pred"), wrap(label, label_shape, "label"), opt);
}

inline LabelVolume find_regions(std::span<const float> pred, const Shape& pred_shape,
                                std::span<const std::uint8_t> label, const Shape& label_shape, std::string_view mode)
{
    RegionOptions opt;
    opt.mode = parse_region_mode(mode);
    return tubetopo::find_regions(wrap(pred, pred_shape, "pred"), wrap(label, label_shape, "label"), opt).mask;
}

inline ProbVolume soft_skeleton(std::span<const float> data, const Shape& shape)
{
    return tubetopo::soft_skeleton(wrap(data, shape, "input"));
}

/// Same bytes as `tubetopo eval` prints for the same inputs.
inline std::string evaluate_pair_json(std::span<const float> pred, const Shape& pred_shape,
                                      std::span<const std::uint8_t> label, const Shape& label_shape,
                                      const Spacing& spacing, double threshold = 0.5)
{
    EvalOptions opt;
    opt.threshold = threshold;
    const MetricReport r =
        evaluate_pair(wrap(pred, pred_shape, "pred"), wrap(label, label_shape, "label"), spacing, opt);
    return dump(to_json(r));
}

} // namespace tubetopo::api
