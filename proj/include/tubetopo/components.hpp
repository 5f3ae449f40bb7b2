// Copyright Contributors to the tubetopo Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdlib>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <utility>
#include <vector>

#include "volume.hpp"

namespace tubetopo {

/// face: voxels sharing a face (6 in 3D, 4 in 2D).
/// full: voxels sharing a face, edge or corner (26 in 3D, 8 in 2D).
enum class Connectivity { face, full };

using ComponentId = std::uint32_t;

struct ComponentLabels {
    Volume<ComponentId> labels; // 0 = background, components are 1..count
    std::size_t count = 0;
    std::vector<std::size_t> sizes; // sizes[k - 1] is the voxel count of component k

    const Shape& shape() const { return labels.shape(); }
};

namespace detail {

struct Offset {
    int dz, dy, dx;
};

/// Neighbour offsets restricted to active axes. With `backward_only`, keeps
/// the half that precedes the centre in linear order.
inline std::vector<Offset> neighbour_offsets(const Shape& s, Connectivity c, bool backward_only)
{
    std::vector<Offset> out;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dz == 0 && dy == 0 && dx == 0)
                    continue;
                if ((dz && !s.active(0)) || (dy && !s.active(1)) || (dx && !s.active(2)))
                    continue;
                if (c == Connectivity::face && std::abs(dz) + std::abs(dy) + std::abs(dx) != 1)
                    continue;
                if (backward_only && !(dz < 0 || (dz == 0 && dy < 0) || (dz == 0 && dy == 0 && dx < 0)))
                    continue;
                out.push_back({dz, dy, dx});
            }
    return out;
}

template <typename Fn>
void for_each_neighbour(const Shape& s, std::size_t z, std::size_t y, std::size_t x,
                        const std::vector<Offset>& offsets, Fn&& fn)
{
    for (const Offset& o : offsets) {
        const auto nz = static_cast<std::ptrdiff_t>(z) + o.dz;
        const auto ny = static_cast<std::ptrdiff_t>(y) + o.dy;
        const auto nx = static_cast<std::ptrdiff_t>(x) + o.dx;
        if (nz < 0 || ny < 0 || nx < 0 || nz >= static_cast<std::ptrdiff_t>(s.z) ||
            ny >= static_cast<std::ptrdiff_t>(s.y) || nx >= static_cast<std::ptrdiff_t>(s.x))
            continue;
        fn(s.index(static_cast<std::size_t>(nz), static_cast<std::size_t>(ny), static_cast<std::size_t>(nx)));
    }
}

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1)
    {
        std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
    }

    std::uint32_t find(std::uint32_t a)
    {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }

    void unite(std::uint32_t a, std::uint32_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b)
            return;
        if (size_[a] < size_[b])
            std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

} // namespace detail

/// Labels connected foreground regions in O(n alpha(n)).
///
/// Labels are canonical: numbering follows the first voxel of each
/// component in linear (z, y, x) order, so the output depends only on the
/// input mask.
template <typename T>
ComponentLabels label_components(const Volume<T>& mask, Connectivity conn = Connectivity::face)
{
    require_binary(mask, "label_components");
    const Shape& s = mask.shape();
    if (s.size() >= std::size_t{0xffffffffu})
        throw ValidationError("label_components: volume too large for 32-bit labels");

    const auto back = detail::neighbour_offsets(s, conn, true);
    detail::UnionFind uf(s.size());
    for (std::size_t z = 0; z < s.z; ++z)
        for (std::size_t y = 0; y < s.y; ++y)
            for (std::size_t x = 0; x < s.x; ++x) {
                const std::size_t i = s.index(z, y, x);
                if (mask[i] == T(0))
                    continue;
                detail::for_each_neighbour(s, z, y, x, back, [&](std::size_t j) {
                    if (mask[j] != T(0))
                        uf.unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
                });
            }

    // labels[root] doubles as the root -> component map: the root lies in the
    // component it names, so its final label is the same value.
    ComponentLabels out{Volume<ComponentId>(s), 0, {}};
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (mask[i] == T(0))
            continue;
        const std::uint32_t root = uf.find(static_cast<std::uint32_t>(i));
        if (out.labels[root] == 0) {
            out.labels[root] = static_cast<ComponentId>(++out.count);
            out.sizes.push_back(0);
        }
        const ComponentId id = out.labels[root];
        out.labels[i] = id;
        ++out.sizes[id - 1];
    }
    return out;
}

struct OverlapEntry {
    ComponentId a;
    ComponentId b;
    std::size_t voxels;

    friend bool operator==(const OverlapEntry&, const OverlapEntry&) = default;
};

/// Co-occurring nonzero (a, b) component pairs, sorted by (a, b).
using OverlapTable = std::vector<OverlapEntry>;

inline OverlapTable overlap_table(const ComponentLabels& a, const ComponentLabels& b)
{
    require_same_shape(a.labels, b.labels, "overlap_table");
    std::unordered_map<std::uint64_t, std::size_t> counts;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        const ComponentId la = a.labels[i];
        const ComponentId lb = b.labels[i];
        if (la != 0 && lb != 0)
            ++counts[(std::uint64_t(la) << 32) | lb];
    }
    OverlapTable out;
    out.reserve(counts.size());
    for (const auto& [key, n] : counts)
        out.push_back({static_cast<ComponentId>(key >> 32), static_cast<ComponentId>(key & 0xffffffffu), n});
    std::sort(out.begin(), out.end(),
              [](const OverlapEntry& l, const OverlapEntry& r) { return std::pair(l.a, l.b) < std::pair(r.a, r.b); });
    return out;
}

} // namespace tubetopo
