// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "components.hpp"
#include "skeleton.hpp"
#include "volume.hpp"

namespace tubetopo {

struct SkeletonNode {
    std::size_t voxel; // linear index in the skeleton volume
    std::size_t degree;
};

struct SkeletonEdge {
    std::size_t a; // node indices into SkeletonGraph::nodes
    std::size_t b;
    double weight_um;
    std::vector<std::size_t> path; // interior chain voxels, in walk order
};

/// Endpoints (degree 1), junctions (degree >= 3) and isolated voxels as
/// nodes; runs of degree-2 voxels between them as weighted edges.
struct SkeletonGraph {
    Shape shape;
    std::vector<SkeletonNode> nodes;
    std::vector<SkeletonEdge> edges;
};

namespace detail {

inline double step_length(const Shape& s, std::size_t from, std::size_t to, const Spacing& sp)
{
    const auto a = s.coord(from);
    const auto b = s.coord(to);
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double d = (static_cast<double>(b[k]) - static_cast<double>(a[k])) * sp[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

inline std::vector<std::size_t> skeleton_neighbours(const LabelVolume& skel, std::size_t i,
                                                    const std::vector<Offset>& offsets)
{
    std::vector<std::size_t> out;
    const auto c = skel.shape().coord(i);
    for_each_neighbour(skel.shape(), c[0], c[1], c[2], offsets, [&](std::size_t j) {
        if (skel[j])
            out.push_back(j);
    });
    return out;
}

} // namespace detail

/// Edge weights sum the physical length of every voxel-to-voxel step, so
/// anisotropic z spacing is honoured on oblique runs. A closed loop with no
/// endpoint or junction is cut at its first voxel and at the voxel halfway
/// round, giving two parallel edges.
template <typename T>
SkeletonGraph build_skeleton_graph(const Volume<T>& skel_in, const Spacing& spacing,
                                   Connectivity conn = Connectivity::full)
{
    require_binary(skel_in, "build_skeleton_graph");
    if (!spacing.valid())
        throw ValidationError("build_skeleton_graph: spacing components must be positive");
    const LabelVolume skel = volume_cast<std::uint8_t>(skel_in);
    const Shape& s = skel.shape();
    const auto offsets = detail::neighbour_offsets(s, conn, false);

    SkeletonGraph g{s, {}, {}};
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> node_of(s.size(), none);
    std::vector<std::uint8_t> walked(s.size(), 0);
    std::vector<std::vector<std::size_t>> nbrs(s.size());

    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!skel[i])
            continue;
        nbrs[i] = detail::skeleton_neighbours(skel, i, offsets);
        if (nbrs[i].size() != 2) {
            node_of[i] = g.nodes.size();
            g.nodes.push_back({i, nbrs[i].size()});
        }
    }

    auto step = [&](std::size_t a, std::size_t b) { return detail::step_length(s, a, b, spacing); };

    // Follows a degree-2 chain starting at `first`, entered from `from`.
    // Returns the voxel where the walk stopped and the accumulated weight.
    auto walk = [&](std::size_t from, std::size_t first, SkeletonEdge& e) {
        std::size_t prev = from;
        std::size_t cur = first;
        e.weight_um = step(from, first);
        while (true) {
            walked[cur] = 1;
            e.path.push_back(cur);
            const auto& nb = nbrs[cur];
            const std::size_t next = nb[0] == prev ? nb[1] : nb[0];
            e.weight_um += step(cur, next);
            if (node_of[next] != none || walked[next])
                return next;
            prev = cur;
            cur = next;
        }
    };

    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
        const std::size_t v = g.nodes[n].voxel;
        for (std::size_t u : nbrs[v]) {
            if (node_of[u] != none) {
                if (v < u)
                    g.edges.push_back({n, node_of[u], step(v, u), {}});
                continue;
            }
            if (walked[u])
                continue;
            SkeletonEdge e{n, n, 0.0, {}};
            const std::size_t end = walk(v, u, e);
            if (node_of[end] == none)
                throw InternalError("skeleton chain ended on a non-node voxel");
            e.b = node_of[end];
            g.edges.push_back(std::move(e));
        }
    }

    // Whatever is left are closed loops of degree-2 voxels.
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!skel[i] || walked[i] || node_of[i] != none)
            continue;
        std::vector<std::size_t> loop{i};
        walked[i] = 1;
        std::size_t prev = i;
        std::size_t cur = nbrs[i][0];
        while (cur != i) {
            loop.push_back(cur);
            walked[cur] = 1;
            const std::size_t next = nbrs[cur][0] == prev ? nbrs[cur][1] : nbrs[cur][0];
            prev = cur;
            cur = next;
        }
        const std::size_t half = loop.size() / 2;
        const std::size_t na = g.nodes.size();
        g.nodes.push_back({loop[0], 2});
        node_of[loop[0]] = na;
        const std::size_t nb = g.nodes.size();
        g.nodes.push_back({loop[half], 2});
        node_of[loop[half]] = nb;

        SkeletonEdge first{na, nb, 0.0, {}};
        for (std::size_t k = 0; k < half; ++k) {
            first.weight_um += step(loop[k], loop[k + 1]);
            if (k > 0)
                first.path.push_back(loop[k]);
        }
        SkeletonEdge second{nb, na, 0.0, {}};
        for (std::size_t k = half; k < loop.size(); ++k) {
            const std::size_t next = k + 1 == loop.size() ? loop[0] : loop[k + 1];
            second.weight_um += step(loop[k], next);
            if (k > half)
                second.path.push_back(loop[k]);
        }
        g.edges.push_back(std::move(first));
        g.edges.push_back(std::move(second));
    }
    return g;
}

/// Longest shortest path between any two nodes (Dijkstra from every node).
/// The graph must be connected; empty and single-node graphs have diameter 0.
inline double graph_diameter(const SkeletonGraph& g)
{
    const std::size_t n = g.nodes.size();
    if (n <= 1)
        return 0.0;
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (const SkeletonEdge& e : g.edges) {
        if (e.a == e.b)
            continue;
        adj[e.a].emplace_back(e.b, e.weight_um);
        adj[e.b].emplace_back(e.a, e.weight_um);
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    double diameter = 0.0;
    std::vector<double> dist(n);
    using Item = std::pair<double, std::size_t>;
    for (std::size_t src = 0; src < n; ++src) {
        std::fill(dist.begin(), dist.end(), inf);
        dist[src] = 0.0;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        pq.emplace(0.0, src);
        while (!pq.empty()) {
            const auto [d, u] = pq.top();
            pq.pop();
            if (d > dist[u])
                continue;
            for (const auto& [v, w] : adj[u])
                if (d + w < dist[v]) {
                    dist[v] = d + w;
                    pq.emplace(dist[v], v);
                }
        }
        for (double d : dist) {
            if (d == inf)
                throw ValidationError("graph_diameter: graph is disconnected");
            diameter = std::max(diameter, d);
        }
    }
    return diameter;
}

struct InstanceLength {
    ComponentId id = 0;
    double length_um = 0.0;
    bool touches_border = false;
    bool single_voxel = false;
};

struct LengthOptions {
    Connectivity instance_connectivity = Connectivity::face;
    Connectivity skeleton_connectivity = Connectivity::full;
    double skeleton_threshold = 0.5;
    SkeletonOptions skeleton;
};

namespace detail {

struct Box {
    std::array<std::size_t, 3> lo{};
    std::array<std::size_t, 3> hi{}; // inclusive
};

// Crop of one component with a one-voxel zero margin on active axes. Pooling
// treats outside-the-image as zero, so the margin reproduces the border.
inline Volume<double> crop_component(const ComponentLabels& cc, ComponentId id, const Box& box)
{
    const Shape& s = cc.shape();
    std::array<std::size_t, 3> pad{};
    Shape cs{};
    for (int a = 0; a < 3; ++a) {
        pad[a] = s.active(a) ? 1 : 0;
        const std::size_t ext = box.hi[a] - box.lo[a] + 1 + 2 * pad[a];
        (a == 0 ? cs.z : a == 1 ? cs.y : cs.x) = ext;
    }
    Volume<double> out(cs);
    for (std::size_t z = box.lo[0]; z <= box.hi[0]; ++z)
        for (std::size_t y = box.lo[1]; y <= box.hi[1]; ++y)
            for (std::size_t x = box.lo[2]; x <= box.hi[2]; ++x)
                if (cc.labels.at(z, y, x) == id)
                    out.at(z - box.lo[0] + pad[0], y - box.lo[1] + pad[1], x - box.lo[2] + pad[2]) = 1.0;
    return out;
}

} // namespace detail

/// Length of the skeleton of a single binary object: the largest graph
/// diameter over the connected pieces of its binarized soft skeleton.
template <typename T>
double object_length(const Volume<T>& object, const Spacing& spacing, const LengthOptions& opt = {})
{
    const LabelVolume skel =
        binarize_skeleton(soft_skeleton(volume_cast<double>(object), opt.skeleton), opt.skeleton_threshold);
    const ComponentLabels pieces = label_components(skel, opt.skeleton_connectivity);
    double best = 0.0;
    for (ComponentId k = 1; k <= pieces.count; ++k) {
        LabelVolume piece(skel.shape());
        for (std::size_t i = 0; i < piece.size(); ++i)
            piece[i] = pieces.labels[i] == k;
        best = std::max(best, graph_diameter(build_skeleton_graph(piece, spacing, opt.skeleton_connectivity)));
    }
    return best;
}

/// Per-instance length, ordered by component id. Instances touching the
/// volume border are flagged; drop them before computing length statistics.
template <typename T>
std::vector<InstanceLength> instance_lengths(const Volume<T>& mask, const Spacing& spacing,
                                             const LengthOptions& opt = {})
{
    if (!spacing.valid())
        throw ValidationError("instance_lengths: spacing components must be positive");
    const ComponentLabels cc = label_components(mask, opt.instance_connectivity);
    const Shape& s = cc.shape();

    std::vector<detail::Box> boxes(cc.count);
    for (auto& b : boxes) {
        b.lo = {s.z, s.y, s.x};
        b.hi = {0, 0, 0};
    }
    std::vector<InstanceLength> out(cc.count);
    for (std::size_t z = 0; z < s.z; ++z)
        for (std::size_t y = 0; y < s.y; ++y)
            for (std::size_t x = 0; x < s.x; ++x) {
                const ComponentId id = cc.labels.at(z, y, x);
                if (!id)
                    continue;
                detail::Box& b = boxes[id - 1];
                const std::array<std::size_t, 3> c{z, y, x};
                for (int a = 0; a < 3; ++a) {
                    b.lo[a] = std::min(b.lo[a], c[a]);
                    b.hi[a] = std::max(b.hi[a], c[a]);
                }
                if (s.on_border(z, y, x))
                    out[id - 1].touches_border = true;
            }

    for (ComponentId id = 1; id <= cc.count; ++id) {
        InstanceLength& r = out[id - 1];
        r.id = id;
        if (cc.sizes[id - 1] == 1) {
            r.single_voxel = true;
            continue;
        }
        r.length_um = object_length(detail::crop_component(cc, id, boxes[id - 1]), spacing, opt);
    }
    return out;
}

/// Lengths of the instances that stay clear of the volume border.
inline std::vector<double> interior_lengths(const std::vector<InstanceLength>& v)
{
    std::vector<double> out;
    for (const InstanceLength& l : v)
        if (!l.touches_border)
            out.push_back(l.length_um);
    return out;
}

inline std::string lengths_csv(const std::vector<InstanceLength>& v)
{
    std::string out = "instance_id,length_um,touches_border\n";
    char buf[96];
    for (const InstanceLength& l : v) {
        std::snprintf(buf, sizeof buf, "%u,%.6f,%d\n", static_cast<unsigned>(l.id), l.length_um,
                      l.touches_border ? 1 : 0);
        out += buf;
    }
    return out;
}

} // namespace tubetopo
