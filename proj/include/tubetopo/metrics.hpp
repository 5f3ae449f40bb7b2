// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "components.hpp"
#include "lengths.hpp"
#include "volume.hpp"

namespace tubetopo {

/// 2|P & L| / (|P| + |L|); two empty masks score 1.
template <typename A, typename B>
double voxel_dice(const Volume<A>& p, const Volume<B>& l)
{
    require_same_shape(p, l, "voxel_dice");
    std::size_t inter = 0, np = 0, nl = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool a = p[i] != A(0);
        const bool b = l[i] != B(0);
        inter += a && b;
        np += a;
        nl += b;
    }
    if (np + nl == 0)
        return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(np + nl);
}

struct MatchedPair {
    ComponentId label;
    ComponentId pred;
    std::size_t voxels;

    friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct InstanceMatching {
    std::vector<MatchedPair> pairs;
    std::vector<ComponentId> unmatched_labels;
    std::vector<ComponentId> unmatched_preds;
    std::size_t n_label = 0;
    std::size_t n_pred = 0;
};

/// One-to-one greedy matching. Overlapping pairs are visited by decreasing
/// overlap, ties broken by label id then prediction id; a pair is taken
/// only if neither side has been matched yet.
inline InstanceMatching match_instances(const ComponentLabels& label, const ComponentLabels& pred)
{
    require_same_shape(label.labels, pred.labels, "match_instances");
    OverlapTable table = overlap_table(label, pred);
    std::sort(table.begin(), table.end(), [](const OverlapEntry& l, const OverlapEntry& r) {
        return std::tuple(r.voxels, l.a, l.b) < std::tuple(l.voxels, r.a, r.b);
    });

    InstanceMatching m;
    m.n_label = label.count;
    m.n_pred = pred.count;
    std::vector<char> used_l(label.count + 1, 0), used_p(pred.count + 1, 0);
    for (const OverlapEntry& e : table) {
        if (used_l[e.a] || used_p[e.b])
            continue;
        used_l[e.a] = used_p[e.b] = 1;
        m.pairs.push_back({e.a, e.b, e.voxels});
    }
    for (ComponentId k = 1; k <= label.count; ++k)
        if (!used_l[k])
            m.unmatched_labels.push_back(k);
    for (ComponentId k = 1; k <= pred.count; ++k)
        if (!used_p[k])
            m.unmatched_preds.push_back(k);
    return m;
}

struct PrecisionRecall {
    std::optional<double> precision; // unset without prediction instances
    std::optional<double> recall;    // unset without label instances
};

inline PrecisionRecall precision_recall(const InstanceMatching& m)
{
    PrecisionRecall r;
    const double matched = static_cast<double>(m.pairs.size());
    if (m.n_pred > 0)
        r.precision = matched / static_cast<double>(m.n_pred);
    if (m.n_label > 0)
        r.recall = matched / static_cast<double>(m.n_label);
    return r;
}

/// Mean number of distinct prediction components touched by each label
/// component that touches at least one. Unset when none does.
inline std::optional<double> overlapping_instances(const ComponentLabels& label, const ComponentLabels& pred)
{
    require_same_shape(label.labels, pred.labels, "overlapping_instances");
    std::vector<std::size_t> partners(label.count + 1, 0);
    for (const OverlapEntry& e : overlap_table(label, pred))
        ++partners[e.a];
    std::size_t qualifying = 0, total = 0;
    for (ComponentId k = 1; k <= label.count; ++k)
        if (partners[k] > 0) {
            ++qualifying;
            total += partners[k];
        }
    if (qualifying == 0)
        return std::nullopt;
    return static_cast<double>(total) / static_cast<double>(qualifying);
}

/// Exact 1-Wasserstein distance between two empirical distributions:
/// the integral of |F_a - F_b| over the merged sample breakpoints.
inline double wasserstein_1d(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty())
        throw ValidationError("wasserstein_1d: both samples must be nonempty");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    // |F_a - F_b| on a segment is |i nb - j na| / (na nb); the integer
    // numerator keeps the breakpoint weights exact.
    const std::int64_t na = static_cast<std::int64_t>(a.size());
    const std::int64_t nb = static_cast<std::int64_t>(b.size());
    std::size_t i = 0, j = 0;
    double prev = std::min(a.front(), b.front());
    double total = 0.0;
    while (i < a.size() || j < b.size()) {
        const double next = j == b.size() || (i < a.size() && a[i] <= b[j]) ? a[i] : b[j];
        const std::int64_t w = static_cast<std::int64_t>(i) * nb - static_cast<std::int64_t>(j) * na;
        total += static_cast<double>(w < 0 ? -w : w) * (next - prev);
        while (i < a.size() && a[i] == next)
            ++i;
        while (j < b.size() && b[j] == next)
            ++j;
        prev = next;
    }
    return total / (static_cast<double>(na) * static_cast<double>(nb));
}

/// (mean(a) - mean(b)) / sqrt(var(a) + var(b)) with n-1 sample variances.
/// Unset when the combined variance is zero.
inline std::optional<double> ssmd(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() < 2 || b.size() < 2)
        throw ValidationError("ssmd: each sample needs at least two values");
    auto moments = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v)
            m += x;
        m /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v)
            ss += (x - m) * (x - m);
        return std::pair(m, ss / static_cast<double>(v.size() - 1));
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double var = va + vb;
    if (var == 0.0)
        return std::nullopt;
    return (ma - mb) / std::sqrt(var);
}

struct MetricReport {
    double dice = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> overlapping_instances;
    std::optional<double> wasserstein_um;
    std::optional<double> ssmd;
    std::size_t n_label_instances = 0;
    std::size_t n_pred_instances = 0;
    std::vector<InstanceLength> label_lengths;
    std::vector<InstanceLength> pred_lengths;
};

struct EvalOptions {
    double threshold = 0.5;
    Connectivity connectivity = Connectivity::face;
    LengthOptions lengths;
};

/// Full metric suite for one prediction/label pair. Continuous predictions
/// are binarized with p > threshold. Instance metrics count every instance;
/// length statistics drop border-touching ones.
template <typename P, typename L>
MetricReport evaluate_pair(const Volume<P>& p, const Volume<L>& l, const Spacing& spacing,
                           const EvalOptions& opt = {})
{
    require_same_shape(p, l, "evaluate_pair");
    require_binary(l, "evaluate_pair");
    const LabelVolume pb = is_binary(p) ? volume_cast<std::uint8_t>(p) : threshold(p, opt.threshold);
    const LabelVolume lb = volume_cast<std::uint8_t>(l);

    MetricReport r;
    r.dice = voxel_dice(pb, lb);
    const ComponentLabels lc = label_components(lb, opt.connectivity);
    const ComponentLabels pc = label_components(pb, opt.connectivity);
    r.n_label_instances = lc.count;
    r.n_pred_instances = pc.count;
    const PrecisionRecall pr = precision_recall(match_instances(lc, pc));
    r.precision = pr.precision;
    r.recall = pr.recall;
    r.overlapping_instances = overlapping_instances(lc, pc);

    LengthOptions lo = opt.lengths;
    lo.instance_connectivity = opt.connectivity;
    r.label_lengths = instance_lengths(lb, spacing, lo);
    r.pred_lengths = instance_lengths(pb, spacing, lo);
    const std::vector<double> la = interior_lengths(r.label_lengths);
    const std::vector<double> pa = interior_lengths(r.pred_lengths);
    if (!la.empty() && !pa.empty())
        r.wasserstein_um = wasserstein_1d(pa, la);
    if (la.size() >= 2 && pa.size() >= 2)
        r.ssmd = ssmd(pa, la);
    return r;
}

} // namespace tubetopo
