// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <gtest/gtest.h>

#include <tubetopo/array_api.hpp>
#include <tubetopo/io.hpp>
#include <tubetopo/synth.hpp>

#include "cli.hpp"

using namespace tubetopo;
namespace fs = std::filesystem;

namespace {

synth::Scene gap_scene(std::uint64_t seed)
{
    synth::SceneParams p;
    p.dims = {24, 40, 40};
    p.n_tubes = 2;
    p.gaps_per_tube = 1;
    p.p_in = 0.85;
    p.p_out = 0.1;
    p.noise = 0.05;
    return synth::generate_scene(seed, p);
}

std::string cli_out(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    EXPECT_EQ(cli::run(args, out, err), 0) << err.str();
    return out.str();
}

} // namespace

TEST(ArrayApi, NegativeCenterlinePerfectPrediction)
{
    const auto s = gap_scene(1);
    const ProbVolume p = volume_cast<float>(s.label);
    const auto r = api::negative_centerline(p.values(), p.shape(), s.label.values(), s.label.shape());
    EXPECT_EQ(r.value, 0.0);
    const auto skel = soft_skeleton(volume_cast<double>(s.label));
    const double total = sum(skel);
    for (std::size_t i = 0; i < skel.size(); ++i)
        ASSERT_EQ(r.gradient[i], -skel[i] / total);
}

TEST(ArrayApi, BitIdenticalToLibrary)
{
    const auto s = gap_scene(2);
    const auto& p = s.prediction;
    const auto& l = s.label;
    const auto a = api::negative_centerline(p.values(), p.shape(), l.values(), l.shape());
    const auto b = negative_centerline(p, l);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.gradient, b.gradient);

    const auto t = api::simplified_topology(p.values(), p.shape(), l.values(), l.shape(), "as-written");
    RegionOptions opt;
    opt.mode = RegionMode::as_written;
    const auto u = simplified_topology(p, l, opt);
    EXPECT_EQ(t.value, u.value);
    EXPECT_EQ(t.gradient, u.gradient);
    EXPECT_EQ(t.mask, u.mask);
    EXPECT_EQ(api::find_regions(p.values(), p.shape(), l.values(), l.shape(), "label-overlap"), find_regions(p, l).mask);
    EXPECT_EQ(api::soft_skeleton(p.values(), p.shape()), soft_skeleton(p));
}

TEST(ArrayApi, SimplifiedTopologyPerfectPrediction)
{
    const auto s = gap_scene(3);
    const ProbVolume p = volume_cast<float>(s.label);
    const auto r = api::simplified_topology(p.values(), p.shape(), s.label.values(), s.label.shape(), "label-overlap");
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(count_nonzero(r.mask), 0u);
    for (double g : r.gradient)
        ASSERT_EQ(g, 0.0);
}

TEST(ArrayApi, ParityWithCli)
{
    const fs::path dir = fs::temp_directory_path() / ("tubetopo_api_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const Spacing sp{2.0, 0.5, 0.5};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = gap_scene(100 + seed);
        const std::string pp = (dir / "p.cvol").string(), lp = (dir / "l.cvol").string();
        write_volume(s.prediction, sp, pp);
        write_volume(s.label, sp, lp);

        const std::string cli_eval = cli_out({"eval", "--pred", pp, "--label", lp});
        EXPECT_EQ(api::evaluate_pair_json(s.prediction.values(), s.prediction.shape(), s.label.values(),
                                          s.label.shape(), sp),
                  cli_eval)
            << seed;

        if (seed < 3) {
            const auto j = nlohmann::json::parse(
                cli_out({"loss", "--pred", pp, "--label", lp, "--preset", "negative-centerline"}));
            const auto n = api::negative_centerline(s.prediction.values(), s.prediction.shape(), s.label.values(),
                                                    s.label.shape());
            EXPECT_EQ(j["eval"].get<double>(), n.value);
            const auto k = nlohmann::json::parse(
                cli_out({"loss", "--pred", pp, "--label", lp, "--preset", "simplified-topology"}));
            const auto t = api::simplified_topology(s.prediction.values(), s.prediction.shape(), s.label.values(),
                                                    s.label.shape(), "label-overlap");
            EXPECT_EQ(k["eval"].get<double>(), t.value);
            EXPECT_EQ(k["region_mask_voxels"].get<std::size_t>(), count_nonzero(t.mask));
        }
    }
    fs::remove_all(dir);
}

TEST(ArrayApi, FragmentationScene)
{
    LabelVolume l({1, 5, 20});
    ProbVolume p({1, 5, 20});
    for (std::size_t x = 2; x < 18; ++x) {
        l.at(0, 2, x) = 1;
        p.at(0, 2, x) = x < 8 || x >= 11 ? 0.9f : 0.1f;
    }
    const auto j = nlohmann::json::parse(api::evaluate_pair_json(p.values(), p.shape(), l.values(), l.shape(), unit_spacing));
    EXPECT_EQ(j["precision"].get<double>(), 0.5);
    EXPECT_EQ(j["recall"].get<double>(), 1.0);
}

TEST(ArrayApi, Errors)
{
    const std::vector<float> p(8, 0.5f);
    const std::vector<std::uint8_t> l(8, 1);
    const Shape s{2, 2, 2};
    EXPECT_THROW(api::negative_centerline(p, s, l, Shape{1, 2, 4}), ValidationError);
    EXPECT_THROW(api::negative_centerline(p, Shape{3, 2, 2}, l, s), ValidationError);
    EXPECT_THROW(api::simplified_topology(p, s, l, s, "sideways"), ValidationError);
    EXPECT_THROW(api::find_regions(p, s, l, s, ""), ValidationError);
    std::vector<float> bad = p;
    bad[3] = 1.5f;
    EXPECT_THROW(api::negative_centerline(bad, s, l, s), ValidationError);
    std::vector<std::uint8_t> nonbinary = l;
    nonbinary[0] = 2;
    EXPECT_THROW(api::evaluate_pair_json(p, s, nonbinary, s, unit_spacing), ValidationError);
    EXPECT_THROW(api::evaluate_pair_json(p, s, l, s, Spacing{0, 1, 1}), ValidationError);
}

TEST(ArrayApi, ConcurrentCallsAgree)
{
    const auto s = gap_scene(7);
    const auto expected = api::evaluate_pair_json(s.prediction.values(), s.prediction.shape(), s.label.values(),
                                                  s.label.shape(), unit_spacing);
    const auto expected_ncl = negative_centerline(s.prediction, s.label).value;
    std::vector<std::string> got(4);
    std::vector<double> ncl(4);
    {
        std::vector<std::jthread> workers;
        for (std::size_t k = 0; k < got.size(); ++k)
            workers.emplace_back([&, k] {
                got[k] = api::evaluate_pair_json(s.prediction.values(), s.prediction.shape(), s.label.values(),
                                                 s.label.shape(), unit_spacing);
                ncl[k] = api::negative_centerline(s.prediction.values(), s.prediction.shape(), s.label.values(),
                                                  s.label.shape())
                             .value;
            });
    }
    for (std::size_t k = 0; k < got.size(); ++k) {
        EXPECT_EQ(got[k], expected);
        EXPECT_EQ(ncl[k], expected_ncl);
    }
}
