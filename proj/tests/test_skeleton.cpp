// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <gtest/gtest.h>

#include <tubetopo/skeleton.hpp>
#include <tubetopo/synth.hpp>

#include "oracles.hpp"

using namespace tubetopo;

namespace {

Volume<double> smooth_random(Shape s, unsigned seed, double density)
{
    std::mt19937 rng(seed);
    std::bernoulli_distribution b(density);
    Volume<double> v(s);
    for (auto& x : v)
        x = b(rng);
    return oracle::pool(v, false, true);
}

} // namespace

TEST(SoftSkeleton, EmptyInput)
{
    const Volume<double> e({6, 6, 6});
    const auto r = soft_skeleton_run(e);
    EXPECT_EQ(r.skeleton, e);
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_TRUE(r.converged);
}

TEST(SoftSkeleton, ThinLineIsFixedPoint)
{
    Volume<double> v({9, 9, 16});
    for (std::size_t x = 3; x < 13; ++x)
        v.at(4, 4, x) = 1.0;
    const auto r = soft_skeleton_run(v);
    EXPECT_EQ(r.iterations, 0u);
    EXPECT_EQ(r.skeleton, v);
}

namespace {

Volume<double> plane_rect(std::size_t y0, std::size_t y1, std::size_t x0, std::size_t x1)
{
    Volume<double> v({1, 11, 11});
    for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x)
            v.at(0, y, x) = 1.0;
    return v;
}

void expect_pattern(const Volume<double>& skel, const char* const (&rows)[11])
{
    for (std::size_t y = 0; y < 11; ++y)
        for (std::size_t x = 0; x < 11; ++x)
            EXPECT_EQ(skel.at(0, y, x), rows[y][x] == 'X' ? 1.0 : 0.0) << y << "," << x;
}

} // namespace

TEST(SoftSkeleton, SquareMatchesReferenceTrace)
{
    // 7x7 square: the opening never removes anything until the last erosion,
    // so the whole skeleton is the centre voxel.
    const auto sq = plane_rect(2, 9, 2, 9);
    const auto skel = soft_skeleton(sq);
    EXPECT_EQ(skel, oracle::soft_skeleton(sq));
    const char* const expected[11] = {
        "...........", "...........", "...........", "...........", "...........", ".....X.....",
        "...........", "...........", "...........", "...........", "...........",
    };
    expect_pattern(skel, expected);
}

TEST(SoftSkeleton, RectangleLeavesCentralRidge)
{
    const auto rect = plane_rect(2, 9, 1, 10);
    const auto skel = soft_skeleton(rect);
    EXPECT_EQ(skel, oracle::soft_skeleton(rect));
    const char* const expected[11] = {
        "...........", "...........", "...........", "...........", "...........", "....XXX....",
        "...........", "...........", "...........", "...........", "...........",
    };
    expect_pattern(skel, expected);
}

TEST(SoftSkeleton, MatchesReferenceOnRandomBlobs)
{
    for (unsigned seed = 0; seed < 6; ++seed) {
        const auto v = smooth_random({12, 12, 12}, seed, 0.05);
        std::size_t ref_iter = 0;
        const auto ref = oracle::soft_skeleton(v, &ref_iter);
        const auto r = soft_skeleton_run(v);
        EXPECT_EQ(r.skeleton, ref);
        EXPECT_EQ(r.iterations, ref_iter);
    }
}

TEST(SoftSkeleton, BinaryInputProperties)
{
    for (unsigned seed = 0; seed < 6; ++seed) {
        const auto v = smooth_random({14, 14, 14}, 100 + seed, 0.04);
        SkeletonOptions opt;
        const auto r = soft_skeleton_run(v, opt);
        EXPECT_TRUE(r.converged);
        EXPECT_LE(r.iterations, (v.shape().max_extent() + 1) / 2);
        EXPECT_TRUE(is_binary(r.skeleton));
        EXPECT_LE(sum(r.skeleton), sum(v));

        for (std::size_t i = 0; i < v.size(); ++i)
            if (r.unclosed[i] > 0) {
                ASSERT_EQ(v[i], 1.0);
            }
    }
}

TEST(SoftSkeleton, ContinuousInputStaysInUnitInterval)
{
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 5; ++trial) {
        Volume<double> v({10, 10, 10});
        for (auto& x : v)
            x = u(rng);
        const auto r = soft_skeleton_run(v);
        EXPECT_TRUE(r.converged);
        EXPECT_LE(r.iterations, (v.shape().max_extent() + 1) / 2);
        for (double x : r.skeleton) {
            ASSERT_GE(x, 0.0);
            ASSERT_LE(x, 1.0);
        }
    }
}

TEST(SoftSkeleton, TranslationEquivariance)
{
    Volume<double> a({20, 20, 20}), b({20, 20, 20});
    for (std::size_t z = 7; z < 10; ++z)
        for (std::size_t y = 6; y < 9; ++y)
            for (std::size_t x = 5; x < 12; ++x) {
                a.at(z, y, x) = 1.0;
                b.at(z + 2, y + 1, x + 3) = 1.0;
            }
    const auto sa = soft_skeleton(a), sb = soft_skeleton(b);
    for (std::size_t z = 0; z < 18; ++z)
        for (std::size_t y = 0; y < 19; ++y)
            for (std::size_t x = 0; x < 17; ++x)
                ASSERT_EQ(sa.at(z, y, x), sb.at(z + 2, y + 1, x + 3));
}

TEST(SoftSkeleton, IterationCapIsHonoured)
{
    const Volume<double> cube({15, 15, 15}, 1.0);
    SkeletonOptions opt;
    opt.max_iter = 2;
    const auto r = soft_skeleton_run(cube, opt);
    EXPECT_EQ(r.iterations, 2u);
    EXPECT_FALSE(r.converged);
}

TEST(SoftSkeleton, RejectsOutOfRangeValues)
{
    Volume<double> v({2, 2, 2});
    v[0] = 1.5;
    EXPECT_THROW(soft_skeleton(v), ValidationError);
}

TEST(SoftSkeleton, TubeSkeletonStaysInsideTube)
{
    synth::SceneParams p;
    p.dims = {40, 40, 40};
    p.n_tubes = 2;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto scene = synth::generate_scene(seed, p);
        const auto skel = soft_skeleton(volume_cast<double>(scene.label));
        for (std::size_t i = 0; i < skel.size(); ++i)
            if (skel[i] > 0) {
                ASSERT_EQ(scene.label[i], 1);
            }
    }
}

TEST(BinarizeSkeleton, ThresholdConventions)
{
    EXPECT_EQ(count_nonzero(binarize_skeleton(Volume<double>({2, 2, 2}, 0.0))), 0u);
    EXPECT_EQ(count_nonzero(binarize_skeleton(Volume<double>({2, 2, 2}, 1.0))), 8u);
    EXPECT_EQ(count_nonzero(binarize_skeleton(Volume<double>({2, 2, 2}, 0.5), 0.5)), 0u);
    EXPECT_THROW(binarize_skeleton(Volume<double>({1, 1, 1}), 0.0), ValidationError);
    EXPECT_THROW(binarize_skeleton(Volume<double>({1, 1, 1}), 1.0), ValidationError);
}
