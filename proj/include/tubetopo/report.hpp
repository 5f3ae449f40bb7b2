// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "losses.hpp"
#include "metrics.hpp"

namespace tubetopo {

namespace detail {
inline void put_optional(nlohmann::json& j, const char* key, const std::optional<double>& v)
{
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    j[std::string(key) + "_defined"] = v.has_value();
}
} // namespace detail

/// Flat metric report. Undefined values are null with "<key>_defined": false.
inline nlohmann::json to_json(const MetricReport& r)
{
    nlohmann::json j;
    detail::put_optional(j, "dice", r.dice);
    detail::put_optional(j, "precision", r.precision);
    detail::put_optional(j, "recall", r.recall);
    detail::put_optional(j, "overlapping_instances", r.overlapping_instances);
    detail::put_optional(j, "wasserstein_um", r.wasserstein_um);
    detail::put_optional(j, "ssmd", r.ssmd);
    j["n_label_instances"] = r.n_label_instances;
    j["n_pred_instances"] = r.n_pred_instances;
    return j;
}

inline nlohmann::json to_json(const LossReport& r, std::optional<std::string> preset = std::nullopt)
{
    nlohmann::json j;
    j["preset"] = preset ? nlohmann::json(*preset) : nlohmann::json(nullptr);
    j["eval_kind"] = std::string(to_string(r.weights.eval));
    j["w_bce"] = r.weights.w_bce;
    j["w_dice"] = r.weights.w_dice;
    j["w_eval"] = r.weights.eval == EvalKind::none ? nlohmann::json(nullptr) : nlohmann::json(r.weights.w_eval);
    j["bce"] = r.bce;
    j["dice"] = r.dice;
    j["eval"] = r.eval ? nlohmann::json(*r.eval) : nlohmann::json(nullptr);
    j["combined"] = r.combined;
    j["gradient_available"] = r.gradient.has_value();
    j["region_mask_voxels"] =
        r.region_mask ? nlohmann::json(count_nonzero(*r.region_mask)) : nlohmann::json(nullptr);
    j["warnings"] = r.warnings;
    return j;
}

/// Single-line JSON text, identical bytes for identical reports.
inline std::string dump(const nlohmann::json& j) { return j.dump() + "\n"; }

} // namespace tubetopo
