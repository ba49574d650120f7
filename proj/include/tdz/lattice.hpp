#pragma once

// Geometry of the product graph T_d □ Z: a d-regular tree crossed with the
// integer line.
//
// Tree vertices use a branch-path code. The origin is the empty path; the
// first step picks one of d neighbors and every later step one of the d-1
// children (no backtracking). A path of length n is packed into a (depth,
// rank) pair where rank is the mixed-radix number whose leading digit has
// radix d and the rest radix d-1. Within one sphere ranks are dense, so
// offset(depth) + rank is a dense global vertex id.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdz/error.hpp"

namespace tdz {

struct TreeVertex {
    std::uint32_t depth = 0;
    std::uint64_t rank = 0;

    bool is_origin() const { return depth == 0; }
    friend bool operator==(const TreeVertex&, const TreeVertex&) = default;
    friend auto operator<=>(const TreeVertex&, const TreeVertex&) = default;

    template <typename H>
    friend H AbslHashValue(H h, const TreeVertex& v) {
        return H::combine(std::move(h), v.depth, v.rank);
    }
};

struct SiteCoord {
    TreeVertex tree;
    std::int32_t layer = 0;

    friend bool operator==(const SiteCoord&, const SiteCoord&) = default;
    friend auto operator<=>(const SiteCoord&, const SiteCoord&) = default;

    template <typename H>
    friend H AbslHashValue(H h, const SiteCoord& s) {
        return H::combine(std::move(h), s.tree, s.layer);
    }
};

enum class EdgeKind : std::uint8_t { Tree = 0, Line = 1 };

// Canonical undirected edge. Tree edges are based at the parent-side
// endpoint and carry the child index taken from it; line edges are based at
// the lower-layer endpoint.
struct EdgeCoord {
    EdgeKind kind = EdgeKind::Tree;
    SiteCoord base;
    std::uint32_t branch = 0;

    friend bool operator==(const EdgeCoord&, const EdgeCoord&) = default;
    friend auto operator<=>(const EdgeCoord&, const EdgeCoord&) = default;

    template <typename H>
    friend H AbslHashValue(H h, const EdgeCoord& e) {
        return H::combine(std::move(h), static_cast<int>(e.kind), e.base, e.branch);
    }
};

struct LatticeConstants {
    int d = 3;
    int branching = 2;  // b = d - 1
    int cheeger = 1;    // h(T_d □ Z) = d - 2, stored rather than derived
    int growth = 2;     // gr(T_d □ Z) = d - 1
};

class Lattice {
public:
    static constexpr int kMaxDepthCap = 63;

    explicit Lattice(int d);

    int degree() const { return d_; }
    int branching() const { return b_; }
    LatticeConstants constants() const { return {d_, b_, d_ - 2, d_ - 1}; }

    // Largest depth whose vertex ids fit the packed 63-bit id space.
    int max_depth() const { return max_depth_; }

    // |S(n)| = d (d-1)^{n-1}, with |S(0)| = 1.
    std::uint64_t sphere_size(int n) const;
    // |B_T(r)|, saturating at UINT64_MAX.
    std::uint64_t tree_ball_size(int r) const;

    std::uint64_t vertex_id(TreeVertex v) const { return offset_[v.depth] + v.rank; }

    TreeVertex from_branches(std::span<const std::uint32_t> branches) const;
    std::vector<std::uint32_t> branches(TreeVertex v) const;
    // Branch index at path position i (0-based), i < v.depth.
    std::uint32_t digit(TreeVertex v, std::uint32_t i) const;
    bool valid(TreeVertex v) const;

    TreeVertex parent(TreeVertex v) const {
        if (v.depth <= 1) return {};
        return {v.depth - 1, v.rank / static_cast<std::uint64_t>(b_)};
    }
    std::uint32_t child_count(TreeVertex v) const {
        return v.depth == 0 ? static_cast<std::uint32_t>(d_) : static_cast<std::uint32_t>(b_);
    }
    TreeVertex child(TreeVertex v, std::uint32_t c) const {
        if (v.depth == 0) return {1, c};
        return {v.depth + 1, v.rank * static_cast<std::uint64_t>(b_) + c};
    }
    // Index of v among its parent's children.
    std::uint32_t child_index(TreeVertex v) const {
        if (v.depth <= 1) return static_cast<std::uint32_t>(v.rank);
        return static_cast<std::uint32_t>(v.rank % static_cast<std::uint64_t>(b_));
    }
    TreeVertex ancestor(TreeVertex v, std::uint32_t depth) const;

    // Depth of the deepest common ancestor (length of the common prefix).
    std::uint32_t common_depth(TreeVertex x, TreeVertex y) const;
    std::uint32_t distance(TreeVertex x, TreeVertex y) const {
        return x.depth + y.depth - 2 * common_depth(x, y);
    }
    std::uint64_t distance(const SiteCoord& x, const SiteCoord& y) const;
    // Graph distance from o = (origin, 0).
    static std::uint64_t norm(const SiteCoord& s) {
        return s.tree.depth + static_cast<std::uint64_t>(s.layer < 0 ? -static_cast<std::int64_t>(s.layer) : s.layer);
    }

    // Ray gamma_r: the geodesic from the origin taking branch r at every step
    // (r in 0..d-2). r = 0 is the canonical ray.
    TreeVertex ray_vertex(std::uint32_t n, std::uint32_t ray = 0) const;
    // Number of leading path digits equal to the ray digit.
    std::uint32_t ray_prefix(TreeVertex v, std::uint32_t ray = 0) const;

    std::vector<TreeVertex> sphere(int n) const;

    std::vector<SiteCoord> neighbors(const SiteCoord& x) const;

    // Calls fn(neighbor, edge) for the d+2 incident edges of x.
    template <typename Fn>
    void for_each_incident(const SiteCoord& x, Fn&& fn) const {
        if (x.tree.depth > 0) {
            SiteCoord up{parent(x.tree), x.layer};
            fn(up, EdgeCoord{EdgeKind::Tree, up, child_index(x.tree)});
        }
        if (static_cast<int>(x.tree.depth) < max_depth_) {
            const std::uint32_t kids = child_count(x.tree);
            for (std::uint32_t c = 0; c < kids; ++c)
                fn(SiteCoord{child(x.tree, c), x.layer}, EdgeCoord{EdgeKind::Tree, x, c});
        }
        fn(SiteCoord{x.tree, x.layer + 1}, EdgeCoord{EdgeKind::Line, x, 0});
        SiteCoord down{x.tree, x.layer - 1};
        fn(down, EdgeCoord{EdgeKind::Line, down, 0});
    }

    // Canonical edge joining two adjacent sites; throws DomainError otherwise.
    EdgeCoord edge_between(const SiteCoord& x, const SiteCoord& y) const;
    std::pair<SiteCoord, SiteCoord> endpoints(const EdgeCoord& e) const;
    // The endpoint farther from o (both endpoints differ in norm by exactly one).
    SiteCoord outer_endpoint(const EdgeCoord& e) const;

    // Stable 64-bit words identifying an edge, used to key the weight field.
    std::array<std::uint32_t, 4> edge_counter(const EdgeCoord& e) const;

    std::string format(TreeVertex v) const;
    std::string format(const SiteCoord& s) const;

private:
    int d_;
    int b_;
    int max_depth_ = 0;
    std::array<std::uint64_t, kMaxDepthCap + 2> offset_{};
    std::array<std::uint64_t, kMaxDepthCap + 2> pow_b_{};
};

// Signed height of x relative to the end of the ray: -|x| on the ray,
// otherwise the level of the nearest ray vertex plus the distance to it.
std::int64_t level(const Lattice& lat, TreeVertex x, std::uint32_t ray = 0);

// Level of x measured from y, against the ray from y that eventually merges
// with the reference ray. Computed from the definition, not from level().
std::int64_t level_relative(const Lattice& lat, TreeVertex y, TreeVertex x, std::uint32_t ray = 0);

// ---------------------------------------------------------------------------
// Finite truncations.

enum class RegionKind { ProductBall, Strip, EdgeSet };

struct RegionShape {
    RegionKind kind = RegionKind::ProductBall;
    int radius = 0;      // ball radius k, or strip tree radius R
    int half_width = 0;  // strip layer half width m

    static RegionShape ball(int k) { return {RegionKind::ProductBall, k, 0}; }
    static RegionShape strip(int tree_radius, int half_width) {
        return {RegionKind::Strip, tree_radius, half_width};
    }
    std::string describe() const;
    friend bool operator==(const RegionShape&, const RegionShape&) = default;
};

inline constexpr std::uint64_t kDefaultEdgeBudget = 50'000'000;

class Region {
public:
    // Lazy regions: membership only, nothing enumerated.
    Region(const Lattice& lat, RegionShape shape);
    // Explicit finite edge set (sub-regions for the exact oracle).
    static Region from_edges(const Lattice& lat, std::vector<EdgeCoord> edges);

    const Lattice& lattice() const { return lat_; }
    const RegionShape& shape() const { return shape_; }
    std::string describe() const;

    bool contains(const SiteCoord& s) const;
    bool contains(const EdgeCoord& e) const;

    // Exact counts; saturate at UINT64_MAX for absurd shapes.
    std::uint64_t vertex_count() const;
    std::uint64_t edge_count() const;

    // Enumerate vertices and edges with canonical dense indices.
    void materialize(std::uint64_t edge_budget = kDefaultEdgeBudget);
    bool materialized() const { return materialized_; }
    const std::vector<SiteCoord>& vertices() const { return vertices_; }
    const std::vector<EdgeCoord>& edges() const { return edges_; }
    // Dense endpoint indices of edges()[i].
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edge_ends() const { return ends_; }
    // Dense index of s, or -1.
    std::int64_t index_of(const SiteCoord& s) const;
    std::int64_t index_of(const EdgeCoord& e) const;

private:
    Region(const Lattice& lat, RegionShape shape, bool);

    Lattice lat_;
    RegionShape shape_;
    bool materialized_ = false;
    std::vector<SiteCoord> vertices_;
    std::vector<EdgeCoord> edges_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ends_;
    std::vector<std::pair<SiteCoord, std::uint32_t>> site_index_;  // sorted
    std::vector<std::pair<EdgeCoord, std::uint32_t>> edge_index_;  // sorted
};

// Build and materialize a ball or strip, refusing shapes above the edge budget.
Region build_region(const Lattice& lat, RegionShape shape, std::uint64_t edge_budget = kDefaultEdgeBudget);

}  // namespace tdz
