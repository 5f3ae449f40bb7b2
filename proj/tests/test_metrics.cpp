// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include <tubetopo/metrics.hpp>
#include <tubetopo/report.hpp>
#include <tubetopo/synth.hpp>

#include "oracles.hpp"

using namespace tubetopo;

namespace {

LabelVolume random_label(Shape s, unsigned seed, double density)
{
    std::mt19937 rng(seed);
    std::bernoulli_distribution b(density);
    LabelVolume v(s);
    for (auto& x : v)
        x = b(rng);
    return v;
}

// One horizontal bar as the label, the prediction split in two fragments.
void fragment_scene(LabelVolume& l, LabelVolume& p)
{
    l = LabelVolume({1, 5, 20});
    p = LabelVolume({1, 5, 20});
    for (std::size_t x = 2; x < 18; ++x) {
        l.at(0, 2, x) = 1;
        p.at(0, 2, x) = x < 8 || x >= 11;
    }
}

std::vector<double> random_samples(std::mt19937& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(0, 50);
    std::vector<double> v(n);
    for (auto& x : v)
        x = u(rng);
    return v;
}

using Pairs = std::map<std::pair<int, int>, std::size_t>;

// Per-voxel census of (label component, prediction component) overlaps.
Pairs census(const std::vector<int>& lc, const std::vector<int>& pc)
{
    Pairs m;
    for (std::size_t i = 0; i < lc.size(); ++i)
        if (lc[i] && pc[i])
            ++m[{lc[i], pc[i]}];
    return m;
}

} // namespace

TEST(VoxelDice, ClosedForms)
{
    LabelVolume a({1, 1, 8}), b({1, 1, 8});
    EXPECT_EQ(voxel_dice(a, b), 1.0);
    a[0] = a[1] = a[2] = a[3] = 1;
    EXPECT_EQ(voxel_dice(a, a), 1.0);
    b[4] = b[5] = b[6] = b[7] = 1;
    EXPECT_EQ(voxel_dice(a, b), 0.0);
    b[4] = b[5] = 0;
    b[2] = b[3] = 1;
    EXPECT_EQ(voxel_dice(a, b), 0.5);
}

TEST(Matching, FragmentationScene)
{
    LabelVolume l, p;
    fragment_scene(l, p);
    const auto lc = label_components(l), pc = label_components(p);
    const auto m = match_instances(lc, pc);
    ASSERT_EQ(m.pairs.size(), 1u);
    const auto pr = precision_recall(m);
    EXPECT_EQ(*pr.precision, 0.5);
    EXPECT_EQ(*pr.recall, 1.0);
    EXPECT_EQ(*overlapping_instances(lc, pc), 2.0);
}

TEST(Matching, PerfectAgreement)
{
    const auto l = oracle::pool(random_label({12, 12, 12}, 1, 0.01), true, true);
    const auto lc = label_components(l);
    const auto m = match_instances(lc, lc);
    EXPECT_EQ(m.pairs.size(), lc.count);
    const auto pr = precision_recall(m);
    EXPECT_EQ(*pr.precision, 1.0);
    EXPECT_EQ(*pr.recall, 1.0);
    EXPECT_EQ(*overlapping_instances(lc, lc), 1.0);
}

TEST(Matching, EmptySides)
{
    LabelVolume l({1, 1, 4}), p({1, 1, 4});
    l[1] = 1;
    const auto pr = precision_recall(match_instances(label_components(l), label_components(p)));
    EXPECT_FALSE(pr.precision.has_value());
    EXPECT_EQ(*pr.recall, 0.0);
    EXPECT_FALSE(overlapping_instances(label_components(l), label_components(p)).has_value());
}

TEST(Matching, EqualsBruteForceGreedy)
{
    for (unsigned seed = 0; seed < 10; ++seed) {
        const auto l = random_label({10, 10, 10}, 100 + seed, 0.3);
        const auto p = random_label({10, 10, 10}, 200 + seed, 0.3);
        int nl = 0, np = 0;
        const auto fl = oracle::flood_fill(l, true, &nl);
        const auto fp = oracle::flood_fill(p, true, &np);
        const Pairs ov = census(fl, fp);

        // Repeatedly take the best remaining admissible pair. Oracle ids
        // differ from library ids, so ties are broken on the smallest linear
        // index of each component, which is what the library ids encode.
        std::map<int, std::size_t> first_l, first_p;
        for (std::size_t i = fl.size(); i-- > 0;) {
            if (fl[i])
                first_l[fl[i]] = i;
            if (fp[i])
                first_p[fp[i]] = i;
        }
        std::set<int> used_l, used_p;
        std::set<std::pair<std::size_t, std::size_t>> expected;
        while (true) {
            const std::pair<const std::pair<int, int>, std::size_t>* best = nullptr;
            for (const auto& e : ov) {
                if (used_l.count(e.first.first) || used_p.count(e.first.second))
                    continue;
                auto key = [&](const auto& x) {
                    return std::make_tuple(-long(x.second), first_l[x.first.first], first_p[x.first.second]);
                };
                if (!best || key(e) < key(*best))
                    best = &e;
            }
            if (!best)
                break;
            used_l.insert(best->first.first);
            used_p.insert(best->first.second);
            expected.insert({first_l[best->first.first], first_p[best->first.second]});
        }

        const auto lc = label_components(l), pc = label_components(p);
        ASSERT_EQ(lc.count, std::size_t(nl));
        const auto m = match_instances(lc, pc);
        std::set<std::pair<std::size_t, std::size_t>> got;
        std::map<ComponentId, std::size_t> lib_first_l, lib_first_p;
        for (std::size_t i = l.size(); i-- > 0;) {
            if (lc.labels[i])
                lib_first_l[lc.labels[i]] = i;
            if (pc.labels[i])
                lib_first_p[pc.labels[i]] = i;
        }
        for (const auto& pair : m.pairs)
            got.insert({lib_first_l[pair.label], lib_first_p[pair.pred]});
        EXPECT_EQ(got, expected) << seed;
        EXPECT_LE(m.pairs.size(), std::min(lc.count, pc.count));
        EXPECT_EQ(m.pairs.size() + m.unmatched_labels.size(), lc.count);
        EXPECT_EQ(m.pairs.size() + m.unmatched_preds.size(), pc.count);
    }
}

TEST(OverlappingInstances, EqualsPerVoxelCensus)
{
    for (unsigned seed = 0; seed < 6; ++seed) {
        const auto l = random_label({10, 10, 10}, 300 + seed, 0.3);
        const auto p = random_label({10, 10, 10}, 400 + seed, 0.3);
        const Pairs ov = census(oracle::flood_fill(l, true), oracle::flood_fill(p, true));
        std::map<int, int> partners;
        for (const auto& e : ov)
            ++partners[e.first.first];
        double total = 0;
        for (const auto& e : partners)
            total += e.second;
        EXPECT_NEAR(*overlapping_instances(label_components(l), label_components(p)),
                    total / double(partners.size()), 1e-12);
    }
}

TEST(Wasserstein, ClosedForms)
{
    const std::vector<double> a{1.0, 4.0, 2.5, 9.0};
    EXPECT_EQ(wasserstein_1d(a, a), 0.0);
    std::vector<double> b = a;
    for (auto& x : b)
        x += 3.0;
    EXPECT_EQ(wasserstein_1d(a, b), 3.0);
    EXPECT_EQ(wasserstein_1d({0.0}, {1.0, 3.0}), 2.0);
    EXPECT_THROW(wasserstein_1d({}, {1.0}), ValidationError);
}

TEST(Wasserstein, MatchesTransportOracle)
{
    std::mt19937 rng(5);
    std::uniform_int_distribution<std::size_t> n(3, 12);
    for (int trial = 0; trial < 15; ++trial) {
        const auto a = random_samples(rng, n(rng));
        const auto b = random_samples(rng, n(rng));
        EXPECT_NEAR(wasserstein_1d(a, b), oracle::transport_w1(a, b), 1e-9);
    }
}

TEST(Wasserstein, TriangleInequality)
{
    std::mt19937 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_samples(rng, 7), b = random_samples(rng, 9), c = random_samples(rng, 4);
        EXPECT_LE(wasserstein_1d(a, c), wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-12);
    }
}

TEST(Ssmd, ClosedForms)
{
    // means 3 apart, sample variances 16 and 9
    const std::vector<double> x{3.0 + 2 * std::sqrt(2.0), 3.0 - 2 * std::sqrt(2.0)};
    const std::vector<double> y{1.5 * std::sqrt(2.0), -1.5 * std::sqrt(2.0)};
    const std::vector<double> a{7.0, -1.0, 2.0};
    EXPECT_NEAR(*ssmd(x, y), 0.6, 1e-12);
    EXPECT_NEAR(*ssmd(y, x), -0.6, 1e-12);
    EXPECT_EQ(*ssmd(a, a), 0.0);
    EXPECT_FALSE(ssmd({1.0, 1.0}, {2.0, 2.0}).has_value());
    EXPECT_THROW(ssmd({1.0}, {1.0, 2.0}), ValidationError);
}

TEST(Ssmd, Antisymmetric)
{
    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = random_samples(rng, 5), b = random_samples(rng, 8);
        EXPECT_EQ(*ssmd(a, b), -*ssmd(b, a));
    }
}

TEST(EvaluatePair, PerfectPrediction)
{
    synth::SceneParams sp;
    sp.dims = {24, 48, 48};
    const auto scene = synth::generate_scene(3, sp);
    const auto r = evaluate_pair(scene.label, scene.label, Spacing{2, 1, 1});
    EXPECT_EQ(r.dice, 1.0);
    EXPECT_EQ(*r.precision, 1.0);
    EXPECT_EQ(*r.recall, 1.0);
    EXPECT_EQ(*r.overlapping_instances, 1.0);
    EXPECT_EQ(*r.wasserstein_um, 0.0);
    EXPECT_EQ(*r.ssmd, 0.0);
    EXPECT_EQ(r.n_label_instances, 3u);
}

TEST(EvaluatePair, FragmentationScene)
{
    LabelVolume l, p;
    fragment_scene(l, p);
    const auto r = evaluate_pair(volume_cast<float>(p), l, unit_spacing);
    EXPECT_EQ(*r.precision, 0.5);
    EXPECT_EQ(*r.recall, 1.0);
    EXPECT_EQ(*r.overlapping_instances, 2.0);
    EXPECT_EQ(r.n_pred_instances, 2u);
    EXPECT_NEAR(r.dice, 2.0 * 13 / 29, 1e-15);
}

TEST(EvaluatePair, SplitTubeMatchesComposedOracles)
{
    synth::SceneParams sp;
    sp.dims = {32, 64, 64};
    sp.n_tubes = 5;
    sp.gaps_per_tube = 0;
    sp.p_in = 0.9;
    sp.p_out = 0.1;
    auto scene = synth::generate_scene(11, sp);
    // Split the first tube by clearing the prediction around its midpoint.
    const auto& mid = scene.tubes[0].centerline[scene.tubes[0].centerline.size() / 2];
    for (std::size_t i = 0; i < scene.prediction.size(); ++i) {
        const auto c = scene.prediction.shape().coord(i);
        const double d = synth::norm(synth::Point{double(c[0]), double(c[1]), double(c[2])} - mid);
        if (d <= scene.tubes[0].radius + 2.5)
            scene.prediction[i] = 0.1f;
    }
    const Spacing spacing{1.5, 1, 1};
    const auto r = evaluate_pair(scene.prediction, scene.label, spacing);

    LabelVolume pb(scene.label.shape());
    for (std::size_t i = 0; i < pb.size(); ++i)
        pb[i] = scene.prediction[i] > 0.5f;
    int nl = 0, np = 0;
    const auto fl = oracle::flood_fill(scene.label, true, &nl);
    const auto fp = oracle::flood_fill(pb, true, &np);
    EXPECT_EQ(r.n_label_instances, std::size_t(nl));
    EXPECT_EQ(r.n_pred_instances, std::size_t(np));
    EXPECT_EQ(np, nl + 1);
    const Pairs ov = census(fl, fp);
    std::map<int, int> partners;
    for (const auto& e : ov)
        ++partners[e.first.first];
    double tot = 0;
    for (const auto& e : partners)
        tot += e.second;
    EXPECT_NEAR(*r.overlapping_instances, tot / double(partners.size()), 1e-12);
    EXPECT_NEAR(*r.precision, double(nl) / np, 1e-12);
    EXPECT_EQ(*r.recall, 1.0);

    std::size_t inter = 0, a = 0, b = 0;
    for (std::size_t i = 0; i < pb.size(); ++i) {
        inter += pb[i] && scene.label[i];
        a += pb[i];
        b += scene.label[i];
    }
    EXPECT_NEAR(r.dice, 2.0 * inter / double(a + b), 1e-15);

    std::vector<double> ll, pl;
    for (const auto& x : instance_lengths(scene.label, spacing))
        if (!x.touches_border)
            ll.push_back(x.length_um);
    for (const auto& x : instance_lengths(pb, spacing))
        if (!x.touches_border)
            pl.push_back(x.length_um);
    EXPECT_NEAR(*r.wasserstein_um, oracle::transport_w1(pl, ll), 1e-9);
}

TEST(Report, JsonIsDeterministic)
{
    LabelVolume l, p;
    fragment_scene(l, p);
    const auto a = dump(to_json(evaluate_pair(p, l, unit_spacing)));
    const auto b = dump(to_json(evaluate_pair(p, l, unit_spacing)));
    EXPECT_EQ(a, b);
    const auto j = nlohmann::json::parse(a);
    for (const char* k : {"dice", "precision", "recall", "overlapping_instances", "wasserstein_um", "ssmd",
                          "n_label_instances", "n_pred_instances"})
        EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_TRUE(j["ssmd"].is_null());
    EXPECT_FALSE(j["ssmd_defined"].get<bool>());
    EXPECT_TRUE(j["precision_defined"].get<bool>());
}
