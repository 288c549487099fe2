#pragma once
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "nd.hpp"

namespace hepa {

enum class connectivity {
    face,  // 4-neighbor in 2D, 6-neighbor in 3D
    full,  // 8-neighbor in 2D, 26-neighbor in 3D
};

template <std::size_t R>
struct component {
    std::int32_t label = 0;
    std::size_t voxel_count = 0;
    std::array<std::int64_t, R> bbox_min{};
    std::array<std::int64_t, R> bbox_max{};  // inclusive
    std::array<double, R> centroid{};

    std::int64_t extent(std::size_t axis) const { return bbox_max[axis] - bbox_min[axis] + 1; }
};

template <std::size_t R>
struct labeling {
    ndarray<std::int32_t, R> labels;  // 0 = background, components 1..K
    std::vector<component<R>> components;
};

// in-plane size threshold separating small from large lesions
struct size_rule {
    std::int64_t threshold = 32;

    void validate() const {
        if (threshold < 1) throw config_error("size_rule: threshold must be >= 1");
    }
};

namespace detail {

struct union_find {
    std::vector<std::int32_t> parent;

    std::int32_t add() {
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        return parent.back();
    }
    std::int32_t find(std::int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent[b] = a;
        else parent[a] = b;
    }
};

template <std::size_t R>
inline std::vector<std::array<std::int64_t, R>> previous_neighbors(connectivity c);

template <>
inline std::vector<std::array<std::int64_t, 2>> previous_neighbors<2>(connectivity c) {
    if (c == connectivity::face) return {{-1, 0}, {0, -1}};
    return {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}};
}

template <>
inline std::vector<std::array<std::int64_t, 3>> previous_neighbors<3>(connectivity c) {
    if (c == connectivity::face) return {{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}};
    std::vector<std::array<std::int64_t, 3>> n;
    for (std::int64_t dz = -1; dz <= 0; ++dz)
        for (std::int64_t dy = -1; dy <= 1; ++dy)
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                if (dz > 0) continue;
                if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
                n.push_back({dz, dy, dx});
            }
    return n;
}

}  // namespace detail

// Two-pass union-find labeling. Labels are assigned 1..K in first-encounter
// (raster) order of each component.
template <std::size_t R>
labeling<R> label_components(const ndarray<std::uint8_t, R>& mask, connectivity conn) {
    labeling<R> out;
    out.labels = ndarray<std::int32_t, R>(mask.shape, 0);
    const auto neighbors = detail::previous_neighbors<R>(conn);

    detail::union_find uf;
    uf.add();  // slot 0 reserved for background
    std::vector<std::int32_t> provisional(mask.size(), 0);

    std::array<std::int64_t, R> dims{};
    for (std::size_t a = 0; a < R; ++a) dims[a] = static_cast<std::int64_t>(mask.shape[a]);

    std::array<std::int64_t, R> idx{};
    const std::size_t n = mask.size();
    for (std::size_t lin = 0; lin < n; ++lin) {
        if (mask.data[lin]) {
            std::int32_t assigned = 0;
            for (const auto& off : neighbors) {
                std::array<std::int64_t, R> q;
                bool inside = true;
                for (std::size_t a = 0; a < R; ++a) {
                    q[a] = idx[a] + off[a];
                    if (q[a] < 0 || q[a] >= dims[a]) {
                        inside = false;
                        break;
                    }
                }
                if (!inside) continue;
                std::size_t qlin = 0;
                for (std::size_t a = 0; a < R; ++a)
                    qlin = qlin * mask.shape[a] + static_cast<std::size_t>(q[a]);
                std::int32_t ql = provisional[qlin];
                if (ql == 0) continue;
                if (assigned == 0) assigned = uf.find(ql);
                else uf.unite(assigned, ql);
            }
            if (assigned == 0) assigned = uf.add();
            provisional[lin] = assigned;
        }
        // advance the multi-index
        for (std::size_t a = R; a-- > 0;) {
            if (++idx[a] < dims[a]) break;
            idx[a] = 0;
        }
    }

    // renumber roots in first-encounter order and collect stats
    std::vector<std::int32_t> root_label(uf.parent.size(), 0);
    std::int32_t next = 0;
    idx = {};
    for (std::size_t lin = 0; lin < n; ++lin) {
        std::int32_t p = provisional[lin];
        if (p != 0) {
            std::int32_t root = uf.find(p);
            std::int32_t& lbl = root_label[root];
            if (lbl == 0) {
                lbl = ++next;
                component<R> c;
                c.label = lbl;
                for (std::size_t a = 0; a < R; ++a) {
                    c.bbox_min[a] = idx[a];
                    c.bbox_max[a] = idx[a];
                }
                out.components.push_back(c);
            }
            auto& c = out.components[static_cast<std::size_t>(lbl - 1)];
            ++c.voxel_count;
            for (std::size_t a = 0; a < R; ++a) {
                c.bbox_min[a] = std::min(c.bbox_min[a], idx[a]);
                c.bbox_max[a] = std::max(c.bbox_max[a], idx[a]);
                c.centroid[a] += static_cast<double>(idx[a]);
            }
            out.labels.data[lin] = lbl;
        }
        for (std::size_t a = R; a-- > 0;) {
            if (++idx[a] < dims[a]) break;
            idx[a] = 0;
        }
    }
    for (auto& c : out.components)
        for (std::size_t a = 0; a < R; ++a) c.centroid[a] /= static_cast<double>(c.voxel_count);
    return out;
}

// True iff both in-plane bbox dimensions are <= threshold. For 2D components
// axis 0 is vertical (rows) and axis 1 horizontal (cols).
inline bool is_small(const component<2>& c, const size_rule& rule) {
    rule.validate();
    return c.extent(0) <= rule.threshold && c.extent(1) <= rule.threshold;
}

// 3D variant, judged on the projected in-plane extents (axes H, W).
inline bool is_small(const component<3>& c, const size_rule& rule) {
    rule.validate();
    return c.extent(1) <= rule.threshold && c.extent(2) <= rule.threshold;
}

enum class keep_kind { small, large };

// Zeroes components that fail the keep predicate; idempotent.
inline grid2u8 filter_by_rule(const grid2u8& mask, const size_rule& rule, keep_kind keep,
                              connectivity conn = connectivity::full) {
    rule.validate();
    auto lab = label_components<2>(mask, conn);
    std::vector<std::uint8_t> pass(lab.components.size() + 1, 0);
    for (const auto& c : lab.components) {
        bool small = is_small(c, rule);
        pass[static_cast<std::size_t>(c.label)] = (keep == keep_kind::small) ? small : !small;
    }
    grid2u8 out(mask.shape, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        std::int32_t l = lab.labels.data[i];
        if (l != 0 && pass[static_cast<std::size_t>(l)]) out.data[i] = 1;
    }
    return out;
}

}  // namespace hepa
