// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "components.hpp"
#include "morphology.hpp"
#include "skeleton.hpp"
#include "volume.hpp"

namespace tubetopo {

/// Clamp applied to probabilities before any logarithm.
inline constexpr double kProbEps = 1e-7;
/// Smoothing term of the soft Dice ratio.
inline constexpr double kDiceEps = 1e-7;

using Gradient = Volume<double>;

struct LossValue {
    double value = 0.0;
    Gradient gradient; // d value / d p, same shape as p
    bool degenerate = false; // normaliser was zero; value and gradient set to 0
};

namespace detail {

template <typename P, typename L>
void check_pair(const Volume<P>& p, const Volume<L>& l, const char* what)
{
    require_same_shape(p, l, what);
    require_probability(p, what);
    require_binary(l, what);
}

inline double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

} // namespace detail

/// Mean binary cross-entropy over the voxels of `mask` (every voxel when no
/// mask is given). The gradient is zero off the mask; an empty mask yields 0.
template <typename P, typename L>
LossValue bce(const Volume<P>& p, const Volume<L>& l, const LabelVolume* mask = nullptr)
{
    detail::check_pair(p, l, "bce");
    if (mask) {
        require_same_shape(p, *mask, "bce mask");
        require_binary(*mask, "bce mask");
    }
    LossValue r{0.0, Gradient(p.shape()), false};
    const std::size_t n = mask ? count_nonzero(*mask) : p.size();
    if (n == 0) {
        r.degenerate = true;
        return r;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (mask && (*mask)[i] == 0)
            continue;
        const double pc = detail::clamp_prob(static_cast<double>(p[i]));
        const double li = static_cast<double>(l[i]);
        acc -= li * std::log(pc) + (1.0 - li) * std::log(1.0 - pc);
        r.gradient[i] = (pc - li) / (pc * (1.0 - pc)) * inv_n;
    }
    r.value = acc * inv_n;
    return r;
}

template <typename P, typename L>
LossValue bce(const Volume<P>& p, const Volume<L>& l, const LabelVolume& mask)
{
    return bce(p, l, &mask);
}

/// 1 - (2 sum(p l) + eps) / (sum(p) + sum(l) + eps), with analytic gradient.
template <typename P, typename L>
LossValue soft_dice(const Volume<P>& p, const Volume<L>& l)
{
    detail::check_pair(p, l, "soft_dice");
    double spl = 0.0, sp = 0.0, sl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = static_cast<double>(p[i]);
        const double li = static_cast<double>(l[i]);
        spl += pi * li;
        sp += pi;
        sl += li;
    }
    const double num = 2.0 * spl + kDiceEps;
    const double den = sp + sl + kDiceEps;
    LossValue r{1.0 - num / den, Gradient(p.shape()), false};
    const double den2 = den * den;
    for (std::size_t i = 0; i < p.size(); ++i)
        r.gradient[i] = -(2.0 * static_cast<double>(l[i]) * den - num) / den2;
    return r;
}

/// Fraction of the label skeleton not covered by the prediction:
/// sum((1 - p) * skel(l)) / sum(skel(l)).
///
/// The skeleton depends on the label only, so the loss is affine in p and
/// its gradient is the constant -skel(l) / sum(skel(l)).
template <typename P, typename L>
LossValue negative_centerline(const Volume<P>& p, const Volume<L>& l, const SkeletonOptions& opt = {})
{
    detail::check_pair(p, l, "negative_centerline");
    const Volume<double> skel = soft_skeleton(volume_cast<double>(l), opt);
    const double total = sum(skel);
    LossValue r{0.0, Gradient(p.shape()), false};
    if (total == 0.0) {
        r.degenerate = true;
        return r;
    }
    double missed = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        missed += (1.0 - static_cast<double>(p[i])) * skel[i];
        r.gradient[i] = -skel[i] / total;
    }
    r.value = missed / total;
    return r;
}

/// How prediction components are flagged as spurious.
enum class RegionMode {
    as_written,    // no dilated gap region touches the component
    label_overlap, // the component shares no voxel with the label
};

struct RegionOptions {
    RegionMode mode = RegionMode::label_overlap;
    StructuringElement se = StructuringElement::cross;
    Connectivity connectivity = Connectivity::face;
    double threshold = 0.5;
};

struct RegionAnalysis {
    LabelVolume mask; // 1 on critical voxels
    std::vector<ComponentId> bridging_gaps;        // gap components touching >= 2 prediction components
    std::vector<ComponentId> spurious_predictions; // prediction components flagged by the mode rule
    std::size_t prediction_components = 0;
    std::size_t gap_components = 0;
};

/// Critical regions for continuity.
///
/// The prediction is thresholded and labelled. Label voxels it misses
/// (the gaps) are dilated and labelled; a dilated gap that reaches two or
/// more prediction components is bridging a break. Spurious prediction
/// components are selected by `mode`. The result is the union of the
/// bridging gap components (dilated) and the spurious components (dilated).
template <typename P, typename L>
RegionAnalysis find_regions(const Volume<P>& p, const Volume<L>& l, const RegionOptions& opt = {})
{
    require_same_shape(p, l, "find_regions");
    require_binary(l, "find_regions");
    const Shape& s = p.shape();

    const LabelVolume pred = threshold(p, opt.threshold);
    LabelVolume gaps(s);
    for (std::size_t i = 0; i < s.size(); ++i)
        gaps[i] = (l[i] != L(0) && pred[i] == 0) ? 1 : 0;
    const LabelVolume gaps_dilated = binary_dilate(gaps, opt.se);

    const ComponentLabels pred_cc = label_components(pred, opt.connectivity);
    const ComponentLabels gap_cc = label_components(gaps_dilated, opt.connectivity);
    const OverlapTable touching = overlap_table(gap_cc, pred_cc);

    RegionAnalysis r;
    r.prediction_components = pred_cc.count;
    r.gap_components = gap_cc.count;

    std::vector<std::size_t> partners(gap_cc.count + 1, 0);
    std::vector<char> touched(pred_cc.count + 1, 0);
    for (const OverlapEntry& e : touching) {
        ++partners[e.a];
        touched[e.b] = 1;
    }
    std::vector<char> bridging(gap_cc.count + 1, 0);
    for (ComponentId d = 1; d <= gap_cc.count; ++d)
        if (partners[d] >= 2) {
            bridging[d] = 1;
            r.bridging_gaps.push_back(d);
        }

    std::vector<char> spurious(pred_cc.count + 1, 0);
    if (opt.mode == RegionMode::as_written) {
        for (ComponentId c = 1; c <= pred_cc.count; ++c)
            spurious[c] = !touched[c];
    } else {
        std::vector<char> hits_label(pred_cc.count + 1, 0);
        for (std::size_t i = 0; i < s.size(); ++i)
            if (pred_cc.labels[i] != 0 && l[i] != L(0))
                hits_label[pred_cc.labels[i]] = 1;
        for (ComponentId c = 1; c <= pred_cc.count; ++c)
            spurious[c] = !hits_label[c];
    }
    LabelVolume spurious_mask(s);
    for (ComponentId c = 1; c <= pred_cc.count; ++c)
        if (spurious[c])
            r.spurious_predictions.push_back(c);
    for (std::size_t i = 0; i < s.size(); ++i)
        spurious_mask[i] = spurious[pred_cc.labels[i]] && pred_cc.labels[i] != 0;
    const LabelVolume spurious_dilated = binary_dilate(spurious_mask, opt.se);

    r.mask = LabelVolume(s);
    for (std::size_t i = 0; i < s.size(); ++i)
        r.mask[i] = (bridging[gap_cc.labels[i]] && gap_cc.labels[i] != 0) || spurious_dilated[i];
    return r;
}

struct TopologyLossValue {
    double value = 0.0;
    Gradient gradient;
    LabelVolume mask;
    bool empty_mask = false;
};

/// Cross-entropy restricted to the critical regions of find_regions. The
/// mask is a constant: no gradient flows through its construction.
template <typename P, typename L>
TopologyLossValue simplified_topology(const Volume<P>& p, const Volume<L>& l, const RegionOptions& opt = {})
{
    detail::check_pair(p, l, "simplified_topology");
    RegionAnalysis regions = find_regions(p, l, opt);
    LossValue masked = bce(p, l, regions.mask);
    return {masked.value, std::move(masked.gradient), std::move(regions.mask), masked.degenerate};
}

struct ClDiceValue {
    double value = 1.0;
    double topology_precision = 0.0;
    double topology_sensitivity = 0.0;
    bool degenerate = false;
};

/// clDice baseline: 1 - harmonic mean of skeleton precision and sensitivity.
/// Skeletons run to convergence, like the other skeleton-based terms.
template <typename P, typename L>
ClDiceValue cl_dice(const Volume<P>& p, const Volume<L>& l, const SkeletonOptions& opt = {})
{
    detail::check_pair(p, l, "cl_dice");
    const Volume<double> pd = volume_cast<double>(p);
    const Volume<double> ld = volume_cast<double>(l);
    const Volume<double> skel_p = soft_skeleton(pd, opt);
    const Volume<double> skel_l = soft_skeleton(ld, opt);
    double sp = 0.0, sl = 0.0, sp_in_l = 0.0, sl_in_p = 0.0;
    for (std::size_t i = 0; i < pd.size(); ++i) {
        sp += skel_p[i];
        sl += skel_l[i];
        sp_in_l += skel_p[i] * ld[i];
        sl_in_p += skel_l[i] * pd[i];
    }
    ClDiceValue r;
    if (sp == 0.0 || sl == 0.0) {
        r.degenerate = true;
        return r;
    }
    r.topology_precision = sp_in_l / sp;
    r.topology_sensitivity = sl_in_p / sl;
    const double denom = r.topology_precision + r.topology_sensitivity;
    if (denom == 0.0) {
        r.degenerate = true;
        return r;
    }
    r.value = 1.0 - 2.0 * r.topology_precision * r.topology_sensitivity / denom;
    return r;
}

enum class EvalKind { none, cl_dice, negative_centerline, simplified_topology };

inline std::string_view to_string(EvalKind k)
{
    switch (k) {
    case EvalKind::none: return "none";
    case EvalKind::cl_dice: return "cl_dice";
    case EvalKind::negative_centerline: return "negative_centerline";
    case EvalKind::simplified_topology: return "simplified_topology";
    }
    throw ValidationError("unknown eval kind");
}

inline EvalKind parse_eval_kind(std::string_view s)
{
    for (EvalKind k : {EvalKind::none, EvalKind::cl_dice, EvalKind::negative_centerline,
                       EvalKind::simplified_topology})
        if (s == to_string(k))
            return k;
    throw ValidationError("unknown eval kind '" + std::string(s) + "'");
}

/// Weights of w_bce * BCE + w_dice * Dice + w_eval * eval. With eval kind
/// `none` the eval weight is ignored.
struct LossWeights {
    double w_bce = 1.0;
    double w_dice = 1.0;
    double w_eval = 0.0;
    EvalKind eval = EvalKind::none;

    void validate() const
    {
        for (double w : {w_bce, w_dice, w_eval})
            if (!(std::isfinite(w) && w >= 0.0))
                throw ValidationError("loss weights must be finite and non-negative");
        const double eval_w = eval == EvalKind::none ? 0.0 : w_eval;
        if (w_bce + w_dice + eval_w <= 0.0)
            throw ValidationError("at least one loss weight must be positive");
    }
};

struct LossPreset {
    std::string_view name;
    LossWeights weights;
};

/// Named weight presets. The persistence-diagram topology loss row is not
/// provided.
inline constexpr LossPreset kLossPresets[] = {
    {"baseline", {1.0, 1.0, 0.0, EvalKind::none}},
    {"cldice", {1.0, 1.0, 3.0, EvalKind::cl_dice}},
    {"negative-centerline", {1.0, 1.0, 3.0, EvalKind::negative_centerline}},
    {"simplified-topology", {1.0, 1.0, 4.0 / 5.0, EvalKind::simplified_topology}},
};

inline LossWeights preset_weights(std::string_view name)
{
    for (const LossPreset& p : kLossPresets)
        if (p.name == name)
            return p.weights;
    throw ValidationError("unknown loss preset '" + std::string(name) + "'");
}

struct LossOptions {
    SkeletonOptions skeleton;
    RegionOptions regions;
};

struct LossReport {
    LossWeights weights;
    double bce = 0.0;
    double dice = 0.0;
    std::optional<double> eval; // absent for EvalKind::none
    double combined = 0.0;
    std::optional<Gradient> gradient; // absent when the eval term has none (clDice)
    std::optional<LabelVolume> region_mask; // simplified topology only
    std::vector<std::string> warnings;
};

template <typename P, typename L>
LossReport combined_loss(const Volume<P>& p, const Volume<L>& l, const LossWeights& w, const LossOptions& opt = {})
{
    w.validate();
    LossReport r;
    r.weights = w;
    LossValue b = bce(p, l);
    LossValue d = soft_dice(p, l);
    r.bce = b.value;
    r.dice = d.value;
    r.combined = w.w_bce * b.value + w.w_dice * d.value;

    Gradient g(p.shape());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = w.w_bce * b.gradient[i] + w.w_dice * d.gradient[i];
    bool has_gradient = true;

    auto add_eval = [&](double value, const Gradient* eval_grad) {
        r.eval = value;
        r.combined += w.w_eval * value;
        if (eval_grad)
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += w.w_eval * (*eval_grad)[i];
        else
            has_gradient = false;
    };

    switch (w.eval) {
    case EvalKind::none:
        break;
    case EvalKind::cl_dice: {
        const ClDiceValue c = cl_dice(p, l, opt.skeleton);
        if (c.degenerate)
            r.warnings.emplace_back("cl_dice: empty skeleton or zero overlap, value set to 1");
        add_eval(c.value, nullptr);
        break;
    }
    case EvalKind::negative_centerline: {
        const LossValue n = negative_centerline(p, l, opt.skeleton);
        if (n.degenerate)
            r.warnings.emplace_back("negative_centerline: label skeleton is empty, value set to 0");
        add_eval(n.value, &n.gradient);
        break;
    }
    case EvalKind::simplified_topology: {
        TopologyLossValue t = simplified_topology(p, l, opt.regions);
        add_eval(t.value, &t.gradient);
        r.region_mask = std::move(t.mask);
        break;
    }
    }
    if (has_gradient)
        r.gradient = std::move(g);
    return r;
}

} // namespace tubetopo
