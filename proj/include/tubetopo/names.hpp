// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// String names of option enums, as used on the command line and in reports.

#include <string>
#include <string_view>

#include "components.hpp"
#include "error.hpp"
#include "losses.hpp"
#include "morphology.hpp"
#include "resample.hpp"

namespace tubetopo {

inline RegionMode parse_region_mode(std::string_view s)
{
    if (s == "as-written")
        return RegionMode::as_written;
    if (s == "label-overlap")
        return RegionMode::label_overlap;
    throw ValidationError("unknown region mode '" + std::string(s) + "' (expected as-written or label-overlap)");
}

inline std::string_view to_string(RegionMode m)
{
    return m == RegionMode::as_written ? "as-written" : "label-overlap";
}

inline Connectivity parse_connectivity(std::string_view s)
{
    if (s == "face")
        return Connectivity::face;
    if (s == "full")
        return Connectivity::full;
    throw ValidationError("unknown connectivity '" + std::string(s) + "' (expected face or full)");
}

inline StructuringElement parse_structuring_element(std::string_view s)
{
    if (s == "cross")
        return StructuringElement::cross;
    if (s == "cube")
        return StructuringElement::cube;
    throw ValidationError("unknown structuring element '" + std::string(s) + "' (expected cross or cube)");
}

inline PoolMode parse_pool_mode(std::string_view s)
{
    if (s == "mean")
        return PoolMode::mean;
    if (s == "max")
        return PoolMode::max;
    throw ValidationError("unknown pooling mode '" + std::string(s) + "' (expected mean or max)");
}

} // namespace tubetopo
