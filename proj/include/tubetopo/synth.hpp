// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "volume.hpp"

namespace tubetopo::synth {

struct Point {
    double z = 0, y = 0, x = 0;
};

inline Point operator+(Point a, Point b) { return {a.z + b.z, a.y + b.y, a.x + b.x}; }
inline Point operator-(Point a, Point b) { return {a.z - b.z, a.y - b.y, a.x - b.x}; }
inline Point operator*(double k, Point a) { return {k * a.z, k * a.y, k * a.x}; }
inline double dot(Point a, Point b) { return a.z * b.z + a.y * b.y + a.x * b.x; }
inline double norm(Point a) { return std::sqrt(dot(a, a)); }

/// A run of the centerline removed from the prediction, as fractions of
/// total arc length: [start, start + length).
struct Gap {
    double start = 0;
    double length = 0;
};

struct TubeSpec {
    std::vector<Point> centerline; // polyline in voxel coordinates
    double radius = 1;
    std::vector<Gap> gaps;
    double p_in = 1;
    double p_out = 0;
    std::vector<std::array<std::size_t, 3>> centerline_voxels; // rounded vertices, deduplicated

    double arc_length() const
    {
        double s = 0;
        for (std::size_t i = 1; i < centerline.size(); ++i)
            s += norm(centerline[i] - centerline[i - 1]);
        return s;
    }
};

struct SceneParams {
    Shape dims{64, 64, 64};
    std::size_t n_tubes = 3;
    double radius_min = 2.0;
    double radius_max = 3.0;
    double length_min = 20.0; // voxels of arc length
    double length_max = 40.0;
    double max_turn = 0.15;   // bound on per-step direction change, radians
    std::size_t gaps_per_tube = 0;
    double gap_min = 0.15;    // gap length, fraction of arc
    double gap_max = 0.3;
    double p_in = 1.0;
    double p_out = 0.0;
    double noise = 0.0;       // uniform additive noise amplitude on the prediction
    std::size_t max_attempts = 500;
};

struct Scene {
    LabelVolume label;
    ProbVolume prediction;
    std::vector<TubeSpec> tubes;
};

/// Closest point of a polyline to q: distance and arc length at that point.
struct Projection {
    double distance;
    double arc;
};

inline Projection project(const std::vector<Point>& line, Point q)
{
    Projection best{std::numeric_limits<double>::infinity(), 0.0};
    double arc = 0.0;
    if (line.size() == 1)
        return {norm(q - line[0]), 0.0};
    for (std::size_t i = 1; i < line.size(); ++i) {
        const Point a = line[i - 1];
        const Point d = line[i] - a;
        const double len2 = dot(d, d);
        const double t = len2 > 0 ? std::clamp(dot(q - a, d) / len2, 0.0, 1.0) : 0.0;
        const double dist = norm(q - (a + t * d));
        if (dist < best.distance)
            best = {dist, arc + t * std::sqrt(len2)};
        arc += std::sqrt(len2);
    }
    return best;
}

namespace detail {

inline void validate(const SceneParams& p)
{
    if (p.dims.size() == 0)
        throw ValidationError("scene dims must be nonzero");
    if (!(p.radius_min >= 1.0 && p.radius_max >= p.radius_min))
        throw ValidationError("tube radius must satisfy 1 <= radius_min <= radius_max");
    if (!(p.length_min > 0 && p.length_max >= p.length_min))
        throw ValidationError("tube length range is invalid");
    if (!(p.p_in >= 0 && p.p_in <= 1 && p.p_out >= 0 && p.p_out <= 1))
        throw ValidationError("p_in and p_out must lie in [0,1]");
    if (!(p.noise >= 0 && p.p_in - p.noise > 0.5 && p.p_out + p.noise < 0.5))
        throw ValidationError("noise must keep p_in above and p_out below 0.5");
    if (p.gaps_per_tube > 0) {
        if (!(p.gap_min > 0 && p.gap_max >= p.gap_min && p.gaps_per_tube * p.gap_max <= 0.6))
            throw ValidationError("gap fractions are invalid or leave no room for interior gaps");
        if (p.gap_min * p.length_min < 3.0)
            throw ValidationError("gaps must span at least 3 voxels of arc to split the prediction");
    }
}

inline Point random_unit(std::mt19937_64& rng, bool planar)
{
    std::normal_distribution<double> n(0.0, 1.0);
    while (true) {
        Point d{planar ? 0.0 : n(rng), n(rng), n(rng)};
        const double l = norm(d);
        if (l > 1e-6)
            return (1.0 / l) * d;
    }
}

} // namespace detail

/// Seeded scene of non-touching tubes with smooth random-walk centerlines.
///
/// The label is the union of the tubes (voxels within `radius` of the
/// centerline). The prediction is p_in on tube voxels, p_out elsewhere and
/// on voxels whose closest centerline point falls inside a gap, plus bounded
/// noise, so thresholding at 0.5 recovers the gapped tubes exactly.
inline Scene generate_scene(std::uint64_t seed, const SceneParams& params)
{
    detail::validate(params);
    const Shape& dims = params.dims;
    const bool planar = dims.z == 1;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Scene scene{LabelVolume(dims), ProbVolume(dims, static_cast<float>(params.p_out)), {}};
    std::vector<char> in_gap(dims.size(), 0);

    for (std::size_t t = 0; t < params.n_tubes; ++t) {
        bool placed = false;
        for (std::size_t attempt = 0; attempt < params.max_attempts && !placed; ++attempt) {
            TubeSpec tube;
            tube.radius = params.radius_min + (params.radius_max - params.radius_min) * unit(rng);
            tube.p_in = params.p_in;
            tube.p_out = params.p_out;
            const double margin = std::ceil(tube.radius) + 2.0;
            auto inside = [&](Point q) {
                auto ok = [&](double v, std::size_t ext) {
                    return ext == 1 ? v == 0.0 : (v >= margin && v <= static_cast<double>(ext) - 1.0 - margin);
                };
                return ok(q.z, dims.z) && ok(q.y, dims.y) && ok(q.x, dims.x);
            };
            auto draw = [&](std::size_t ext) {
                return ext == 1 ? 0.0 : margin + (static_cast<double>(ext) - 1.0 - 2.0 * margin) * unit(rng);
            };
            Point pos{draw(dims.z), draw(dims.y), draw(dims.x)};
            if (!inside(pos))
                continue;
            const double target = params.length_min + (params.length_max - params.length_min) * unit(rng);
            Point dir = detail::random_unit(rng, planar);
            tube.centerline.push_back(pos);
            double length = 0.0;
            while (length + 1.0 <= target) {
                // Bounded turn: tilt by a random perpendicular of norm <= tan(max_turn).
                Point perp = detail::random_unit(rng, planar);
                perp = perp - dot(perp, dir) * dir;
                const double pl = norm(perp);
                if (pl > 1e-9)
                    dir = dir + (std::tan(params.max_turn) * unit(rng) / pl) * perp;
                dir = (1.0 / norm(dir)) * dir;
                const Point next = pos + dir;
                if (!inside(next))
                    break;
                pos = next;
                tube.centerline.push_back(pos);
                length += 1.0;
            }
            if (length < params.length_min)
                continue;

            bool clear = true;
            for (const TubeSpec& other : scene.tubes) {
                const double min_gap = tube.radius + other.radius + 2.0;
                for (const Point& q : tube.centerline)
                    if (project(other.centerline, q).distance < min_gap) {
                        clear = false;
                        break;
                    }
                if (!clear)
                    break;
            }
            if (!clear)
                continue;

            for (std::size_t g = 0; g < params.gaps_per_tube; ++g) {
                // Interior gaps, disjoint, away from the caps.
                for (std::size_t tries = 0; tries < 100; ++tries) {
                    const double len = params.gap_min + (params.gap_max - params.gap_min) * unit(rng);
                    const double start = 0.15 + (0.85 - len - 0.15) * unit(rng);
                    bool overlaps = false;
                    for (const Gap& o : tube.gaps)
                        if (start < o.start + o.length + 0.05 && o.start < start + len + 0.05)
                            overlaps = true;
                    if (!overlaps) {
                        tube.gaps.push_back({start, len});
                        break;
                    }
                }
            }
            std::sort(tube.gaps.begin(), tube.gaps.end(), [](const Gap& a, const Gap& b) { return a.start < b.start; });

            // Rasterize; any 26-neighbour contact with an earlier tube rejects the tube.
            const double total = tube.arc_length();
            std::array<double, 3> lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
            for (const Point& q : tube.centerline) {
                const std::array<double, 3> c{q.z, q.y, q.x};
                for (int a = 0; a < 3; ++a) {
                    lo[a] = std::min(lo[a], c[a]);
                    hi[a] = std::max(hi[a], c[a]);
                }
            }
            std::vector<std::pair<std::size_t, bool>> voxels;
            auto clampi = [](double v, std::size_t ext) {
                return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(ext) - 1.0));
            };
            const double reach = tube.radius + 1.0;
            for (std::size_t z = clampi(std::floor(lo[0] - reach), dims.z); z <= clampi(std::ceil(hi[0] + reach), dims.z); ++z)
                for (std::size_t y = clampi(std::floor(lo[1] - reach), dims.y); y <= clampi(std::ceil(hi[1] + reach), dims.y); ++y)
                    for (std::size_t x = clampi(std::floor(lo[2] - reach), dims.x); x <= clampi(std::ceil(hi[2] + reach), dims.x); ++x) {
                        const Projection pr = project(tube.centerline, {double(z), double(y), double(x)});
                        if (pr.distance > tube.radius)
                            continue;
                        const double f = total > 0 ? pr.arc / total : 0.0;
                        bool gap = false;
                        for (const Gap& g : tube.gaps)
                            gap = gap || (f >= g.start && f < g.start + g.length);
                        voxels.emplace_back(dims.index(z, y, x), gap);
                    }
            for (const auto& [i, gap] : voxels) {
                const auto c = dims.coord(i);
                for (int dz = -1; dz <= 1 && clear; ++dz)
                    for (int dy = -1; dy <= 1 && clear; ++dy)
                        for (int dx = -1; dx <= 1 && clear; ++dx) {
                            const auto nz = std::ptrdiff_t(c[0]) + dz, ny = std::ptrdiff_t(c[1]) + dy,
                                       nx = std::ptrdiff_t(c[2]) + dx;
                            if (nz < 0 || ny < 0 || nx < 0 || nz >= std::ptrdiff_t(dims.z) ||
                                ny >= std::ptrdiff_t(dims.y) || nx >= std::ptrdiff_t(dims.x))
                                continue;
                            if (scene.label[dims.index(std::size_t(nz), std::size_t(ny), std::size_t(nx))])
                                clear = false;
                        }
                if (!clear)
                    break;
            }
            if (!clear)
                continue;

            for (const auto& [i, gap] : voxels) {
                scene.label[i] = 1;
                in_gap[i] = gap;
            }
            std::set<std::array<std::size_t, 3>> seen;
            for (const Point& q : tube.centerline) {
                const std::array<std::size_t, 3> v{static_cast<std::size_t>(std::lround(q.z)),
                                                   static_cast<std::size_t>(std::lround(q.y)),
                                                   static_cast<std::size_t>(std::lround(q.x))};
                if (seen.insert(v).second)
                    tube.centerline_voxels.push_back(v);
            }
            scene.tubes.push_back(std::move(tube));
            placed = true;
        }
        if (!placed)
            throw ValidationError("could not place tube " + std::to_string(t + 1) + " after " +
                                  std::to_string(params.max_attempts) + " attempts");
    }

    std::uniform_real_distribution<double> jitter(-params.noise, params.noise);
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const double base = scene.label[i] && !in_gap[i] ? params.p_in : params.p_out;
        const double v = params.noise > 0 ? base + jitter(rng) : base;
        scene.prediction[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return scene;
}

inline nlohmann::json to_json(const TubeSpec& t)
{
    nlohmann::json j;
    j["radius"] = t.radius;
    j["p_in"] = t.p_in;
    j["p_out"] = t.p_out;
    j["centerline"] = nlohmann::json::array();
    for (const Point& p : t.centerline)
        j["centerline"].push_back({p.z, p.y, p.x});
    j["centerline_voxels"] = nlohmann::json::array();
    for (const auto& v : t.centerline_voxels)
        j["centerline_voxels"].push_back({v[0], v[1], v[2]});
    j["gaps"] = nlohmann::json::array();
    for (const Gap& g : t.gaps)
        j["gaps"].push_back({{"start", g.start}, {"length", g.length}});
    j["arc_length"] = t.arc_length();
    return j;
}

inline nlohmann::json truth_json(const Scene& s, std::uint64_t seed)
{
    nlohmann::json j;
    j["seed"] = seed;
    j["dims"] = {s.label.shape().z, s.label.shape().y, s.label.shape().x};
    j["tubes"] = nlohmann::json::array();
    for (const TubeSpec& t : s.tubes)
        j["tubes"].push_back(to_json(t));
    return j;
}

} // namespace tubetopo::synth
