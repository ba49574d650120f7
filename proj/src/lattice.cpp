#include "tdz/lattice.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace tdz {

namespace {

constexpr std::uint64_t kIdLimit = std::uint64_t{1} << 63;
constexpr std::uint64_t kSat = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a > kSat - b ? kSat : a + b; }
std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    return a > kSat / b ? kSat : a * b;
}

std::uint64_t abs_layer(std::int32_t l) { return static_cast<std::uint64_t>(l < 0 ? -static_cast<std::int64_t>(l) : l); }

}  // namespace

Lattice::Lattice(int d) : d_(d), b_(d - 1) {
    if (d < 3) throw DomainError("tree degree d must be >= 3, got " + std::to_string(d));
    if (d > 1'000'000) throw DomainError("tree degree d is unreasonably large");
    pow_b_[0] = 1;
    offset_[0] = 0;
    offset_[1] = 1;
    std::uint64_t size = 1;  // |S(n)|
    max_depth_ = 0;
    for (int n = 1; n <= kMaxDepthCap; ++n) {
        pow_b_[n] = sat_mul(pow_b_[n - 1], static_cast<std::uint64_t>(b_));
        size = (n == 1) ? static_cast<std::uint64_t>(d_) : sat_mul(size, static_cast<std::uint64_t>(b_));
        const std::uint64_t next = sat_add(offset_[n], size);
        if (next >= kIdLimit) break;
        offset_[n + 1] = next;
        max_depth_ = n;
    }
}

std::uint64_t Lattice::sphere_size(int n) const {
    if (n < 0) throw DomainError("sphere radius must be >= 0");
    if (n == 0) return 1;
    if (n > max_depth_) throw ResourceError("sphere radius " + std::to_string(n) + " exceeds 64-bit vertex coding");
    return offset_[n + 1] - offset_[n];
}

std::uint64_t Lattice::tree_ball_size(int r) const {
    if (r < 0) return 0;
    if (r > max_depth_) return kSat;
    return offset_[r + 1];
}

TreeVertex Lattice::from_branches(std::span<const std::uint32_t> branches) const {
    if (branches.size() > static_cast<std::size_t>(max_depth_))
        throw EncodingError("branch path longer than the supported depth " + std::to_string(max_depth_));
    TreeVertex v;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const std::uint32_t limit = (i == 0) ? static_cast<std::uint32_t>(d_) : static_cast<std::uint32_t>(b_);
        if (branches[i] >= limit) {
            std::ostringstream os;
            os << "branch index " << branches[i] << " at position " << i << " must be < " << limit;
            throw EncodingError(os.str());
        }
        v = child(v, branches[i]);
    }
    return v;
}

std::vector<std::uint32_t> Lattice::branches(TreeVertex v) const {
    std::vector<std::uint32_t> out(v.depth);
    for (std::uint32_t i = 0; i < v.depth; ++i) out[i] = digit(v, i);
    return out;
}

std::uint32_t Lattice::digit(TreeVertex v, std::uint32_t i) const {
    const std::uint64_t q = v.rank / pow_b_[v.depth - 1 - i];
    if (i == 0) return static_cast<std::uint32_t>(q);
    return static_cast<std::uint32_t>(q % static_cast<std::uint64_t>(b_));
}

bool Lattice::valid(TreeVertex v) const {
    if (static_cast<int>(v.depth) > max_depth_) return false;
    if (v.depth == 0) return v.rank == 0;
    return v.rank < sphere_size(static_cast<int>(v.depth));
}

TreeVertex Lattice::ancestor(TreeVertex v, std::uint32_t depth) const {
    if (depth >= v.depth) return v;
    if (depth == 0) return {};
    return {depth, v.rank / pow_b_[v.depth - depth]};
}

std::uint32_t Lattice::common_depth(TreeVertex x, TreeVertex y) const {
    // Prefix agreement is monotone in depth, so bisect.
    std::uint32_t lo = 0, hi = std::min(x.depth, y.depth);
    while (lo < hi) {
        const std::uint32_t mid = (lo + hi + 1) / 2;
        if (ancestor(x, mid) == ancestor(y, mid))
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

std::uint64_t Lattice::distance(const SiteCoord& x, const SiteCoord& y) const {
    const std::int64_t dl = static_cast<std::int64_t>(x.layer) - y.layer;
    return distance(x.tree, y.tree) + static_cast<std::uint64_t>(dl < 0 ? -dl : dl);
}

TreeVertex Lattice::ray_vertex(std::uint32_t n, std::uint32_t ray) const {
    if (ray >= static_cast<std::uint32_t>(b_)) throw DomainError("ray branch must be < d-1");
    if (static_cast<int>(n) > max_depth_) throw ResourceError("ray depth exceeds 64-bit vertex coding");
    TreeVertex v;
    for (std::uint32_t i = 0; i < n; ++i) v = child(v, ray);
    return v;
}

std::uint32_t Lattice::ray_prefix(TreeVertex v, std::uint32_t ray) const {
    std::uint32_t j = 0;
    while (j < v.depth && digit(v, j) == ray) ++j;
    return j;
}

std::vector<TreeVertex> Lattice::sphere(int n) const {
    const std::uint64_t size = sphere_size(n);
    if (size > (std::uint64_t{1} << 32)) throw ResourceError("sphere too large to enumerate");
    std::vector<TreeVertex> out;
    out.reserve(size);
    for (std::uint64_t r = 0; r < size; ++r) out.push_back({static_cast<std::uint32_t>(n), r});
    return out;
}

std::vector<SiteCoord> Lattice::neighbors(const SiteCoord& x) const {
    if (!valid(x.tree)) throw EncodingError("invalid tree vertex " + format(x.tree));
    std::vector<SiteCoord> out;
    out.reserve(static_cast<std::size_t>(d_) + 2);
    for_each_incident(x, [&](const SiteCoord& y, const EdgeCoord&) { out.push_back(y); });
    return out;
}

EdgeCoord Lattice::edge_between(const SiteCoord& x, const SiteCoord& y) const {
    if (x.tree == y.tree) {
        if (y.layer == x.layer + 1) return {EdgeKind::Line, x, 0};
        if (x.layer == y.layer + 1) return {EdgeKind::Line, y, 0};
    } else if (x.layer == y.layer) {
        if (y.tree.depth == x.tree.depth + 1 && parent(y.tree) == x.tree) return {EdgeKind::Tree, x, child_index(y.tree)};
        if (x.tree.depth == y.tree.depth + 1 && parent(x.tree) == y.tree) return {EdgeKind::Tree, y, child_index(x.tree)};
    }
    throw DomainError("sites " + format(x) + " and " + format(y) + " are not adjacent");
}

std::pair<SiteCoord, SiteCoord> Lattice::endpoints(const EdgeCoord& e) const {
    if (e.kind == EdgeKind::Line) return {e.base, SiteCoord{e.base.tree, e.base.layer + 1}};
    return {e.base, SiteCoord{child(e.base.tree, e.branch), e.base.layer}};
}

SiteCoord Lattice::outer_endpoint(const EdgeCoord& e) const {
    auto [a, b] = endpoints(e);
    return norm(a) > norm(b) ? a : b;
}

std::array<std::uint32_t, 4> Lattice::edge_counter(const EdgeCoord& e) const {
    // Tree edges are identified by their child endpoint, line edges by their
    // lower endpoint; the kind bit separates the two families.
    const std::uint64_t id =
        e.kind == EdgeKind::Tree ? vertex_id(child(e.base.tree, e.branch)) : vertex_id(e.base.tree);
    return {static_cast<std::uint32_t>(id),
            static_cast<std::uint32_t>(id >> 32) | (e.kind == EdgeKind::Line ? 0x8000'0000u : 0u),
            static_cast<std::uint32_t>(e.base.layer), 0u};
}

std::string Lattice::format(TreeVertex v) const {
    std::ostringstream os;
    os << '<';
    for (std::uint32_t i = 0; i < v.depth; ++i) os << (i ? "," : "") << digit(v, i);
    os << '>';
    return os.str();
}

std::string Lattice::format(const SiteCoord& s) const { return "(" + format(s.tree) + "," + std::to_string(s.layer) + ")"; }

std::int64_t level(const Lattice& lat, TreeVertex x, std::uint32_t ray) {
    const std::int64_t j = lat.ray_prefix(x, ray);
    return static_cast<std::int64_t>(x.depth) - 2 * j;
}

std::int64_t level_relative(const Lattice& lat, TreeVertex y, TreeVertex x, std::uint32_t ray) {
    // gamma_y climbs from y to the anchor (the last ray vertex on y's path)
    // and then follows the reference ray outward.
    const std::uint32_t jy = lat.ray_prefix(y, ray);
    const std::uint32_t c = lat.common_depth(x, y);
    TreeVertex proj;
    if (c > jy) {
        proj = lat.ancestor(y, c);
    } else {
        const std::uint32_t jx = lat.ray_prefix(x, ray);
        proj = lat.ray_vertex(std::max(jx, jy), ray);
    }
    return -static_cast<std::int64_t>(lat.distance(y, proj)) + static_cast<std::int64_t>(lat.distance(x, proj));
}

// ---------------------------------------------------------------------------

std::string RegionShape::describe() const {
    switch (kind) {
        case RegionKind::ProductBall: return "ball(" + std::to_string(radius) + ")";
        case RegionKind::Strip: return "strip(" + std::to_string(radius) + "," + std::to_string(half_width) + ")";
        case RegionKind::EdgeSet: return "edges";
    }
    return "?";
}

Region::Region(const Lattice& lat, RegionShape shape) : lat_(lat), shape_(shape) {
    if (shape.kind == RegionKind::EdgeSet) throw ConfigError("edge-set regions are built with Region::from_edges");
    if (shape.radius < 0 || shape.half_width < 0) throw ConfigError("region radii must be >= 0");
    if (shape.radius > lat.max_depth()) throw ResourceError("region tree radius exceeds 64-bit vertex coding");
}

Region::Region(const Lattice& lat, RegionShape shape, bool) : lat_(lat), shape_(shape) {}

namespace {

// Canonical ordering: by the norm of the outer endpoint (so ball(k) is a
// prefix of ball(k+1)), then kind, layer, vertex id, branch.
struct EdgeOrder {
    const Lattice* lat;
    auto key(const EdgeCoord& e) const {
        return std::make_tuple(Lattice::norm(lat->outer_endpoint(e)), static_cast<int>(e.kind), e.base.layer,
                               lat->vertex_id(e.base.tree), e.branch);
    }
    bool operator()(const EdgeCoord& a, const EdgeCoord& b) const { return key(a) < key(b); }
};

struct SiteOrder {
    const Lattice* lat;
    auto key(const SiteCoord& s) const { return std::make_tuple(Lattice::norm(s), s.layer, lat->vertex_id(s.tree)); }
    bool operator()(const SiteCoord& a, const SiteCoord& b) const { return key(a) < key(b); }
};

}  // namespace

Region Region::from_edges(const Lattice& lat, std::vector<EdgeCoord> edges) {
    Region r(lat, RegionShape{RegionKind::EdgeSet, 0, 0}, true);
    std::sort(edges.begin(), edges.end(), EdgeOrder{&lat});
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    std::vector<SiteCoord> sites;
    for (const auto& e : edges) {
        if (e.kind == EdgeKind::Tree && e.branch >= lat.child_count(e.base.tree))
            throw EncodingError("tree edge branch out of range");
        if (!lat.valid(e.base.tree)) throw EncodingError("invalid edge base");
        auto [a, b] = lat.endpoints(e);
        sites.push_back(a);
        sites.push_back(b);
    }
    std::sort(sites.begin(), sites.end(), SiteOrder{&lat});
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    r.vertices_ = std::move(sites);
    r.edges_ = std::move(edges);
    r.materialized_ = true;
    r.site_index_.reserve(r.vertices_.size());
    for (std::uint32_t i = 0; i < r.vertices_.size(); ++i) r.site_index_.emplace_back(r.vertices_[i], i);
    std::sort(r.site_index_.begin(), r.site_index_.end());
    r.edge_index_.reserve(r.edges_.size());
    for (std::uint32_t i = 0; i < r.edges_.size(); ++i) r.edge_index_.emplace_back(r.edges_[i], i);
    std::sort(r.edge_index_.begin(), r.edge_index_.end());
    for (const auto& e : r.edges_) {
        auto [a, b] = lat.endpoints(e);
        r.ends_.emplace_back(static_cast<std::uint32_t>(r.index_of(a)), static_cast<std::uint32_t>(r.index_of(b)));
    }
    return r;
}

std::string Region::describe() const {
    if (shape_.kind == RegionKind::EdgeSet) return "edges(" + std::to_string(edges_.size()) + ")";
    return shape_.describe();
}

bool Region::contains(const SiteCoord& s) const {
    switch (shape_.kind) {
        case RegionKind::ProductBall: return Lattice::norm(s) <= static_cast<std::uint64_t>(shape_.radius);
        case RegionKind::Strip:
            return s.tree.depth <= static_cast<std::uint32_t>(shape_.radius) &&
                   abs_layer(s.layer) <= static_cast<std::uint64_t>(shape_.half_width);
        case RegionKind::EdgeSet: return index_of(s) >= 0;
    }
    return false;
}

bool Region::contains(const EdgeCoord& e) const {
    if (shape_.kind == RegionKind::EdgeSet) return index_of(e) >= 0;
    // Balls and strips are induced subgraphs; the outer endpoint decides.
    if (e.kind == EdgeKind::Line) return contains(e.base) && contains(SiteCoord{e.base.tree, e.base.layer + 1});
    return contains(e.base) && contains(SiteCoord{TreeVertex{e.base.tree.depth + 1, 0}, e.base.layer});
}

std::uint64_t Region::vertex_count() const {
    const int k = shape_.radius;
    switch (shape_.kind) {
        case RegionKind::ProductBall: {
            std::uint64_t v = lat_.tree_ball_size(k);
            for (int j = 1; j <= k; ++j) v = sat_add(v, sat_mul(2, lat_.tree_ball_size(k - j)));
            return v;
        }
        case RegionKind::Strip:
            return sat_mul(lat_.tree_ball_size(k), 2 * static_cast<std::uint64_t>(shape_.half_width) + 1);
        case RegionKind::EdgeSet: return vertices_.size();
    }
    return 0;
}

std::uint64_t Region::edge_count() const {
    const int k = shape_.radius;
    switch (shape_.kind) {
        case RegionKind::ProductBall: {
            // Tree edges inside each layer plus line edges between layers.
            std::uint64_t e = 0;
            for (int j = -k; j <= k; ++j) {
                const int r = k - std::abs(j);
                e = sat_add(e, lat_.tree_ball_size(r) - 1);
                if (j < k) e = sat_add(e, lat_.tree_ball_size(k - std::max(std::abs(j), std::abs(j + 1))));
            }
            return e;
        }
        case RegionKind::Strip: {
            const std::uint64_t layers = 2 * static_cast<std::uint64_t>(shape_.half_width) + 1;
            const std::uint64_t t = lat_.tree_ball_size(k);
            return sat_add(sat_mul(t - 1, layers), sat_mul(t, layers - 1));
        }
        case RegionKind::EdgeSet: return edges_.size();
    }
    return 0;
}

void Region::materialize(std::uint64_t edge_budget) {
    if (materialized_) return;
    const std::uint64_t ne = edge_count();
    if (ne > edge_budget)
        throw ResourceError("region " + describe() + " has " + std::to_string(ne) + " edges, above the budget of " +
                            std::to_string(edge_budget));
    const int k = shape_.radius;
    const int m = shape_.kind == RegionKind::ProductBall ? k : shape_.half_width;
    std::vector<SiteCoord> sites;
    sites.reserve(vertex_count());
    for (int j = -m; j <= m; ++j) {
        const int r = shape_.kind == RegionKind::ProductBall ? k - std::abs(j) : k;
        for (int n = 0; n <= r; ++n) {
            const std::uint64_t size = lat_.sphere_size(n);
            for (std::uint64_t q = 0; q < size; ++q) sites.push_back({TreeVertex{static_cast<std::uint32_t>(n), q}, j});
        }
    }
    std::vector<EdgeCoord> edges;
    edges.reserve(ne);
    for (const auto& s : sites) {
        const std::uint32_t kids = lat_.child_count(s.tree);
        for (std::uint32_t c = 0; c < kids; ++c) {
            EdgeCoord e{EdgeKind::Tree, s, c};
            if (contains(e)) edges.push_back(e);
        }
        EdgeCoord up{EdgeKind::Line, s, 0};
        if (contains(up)) edges.push_back(up);
    }
    Region full = from_edges(lat_, std::move(edges));
    // from_edges drops isolated sites; a ball or strip has none unless it is a
    // single site, which we keep.
    if (full.vertices_.empty()) {
        full.vertices_ = sites;
        full.site_index_ = {{sites.front(), 0}};
    }
    vertices_ = std::move(full.vertices_);
    edges_ = std::move(full.edges_);
    ends_ = std::move(full.ends_);
    site_index_ = std::move(full.site_index_);
    edge_index_ = std::move(full.edge_index_);
    materialized_ = true;
}

std::int64_t Region::index_of(const SiteCoord& s) const {
    auto it = std::lower_bound(site_index_.begin(), site_index_.end(), s,
                               [](const auto& a, const SiteCoord& b) { return a.first < b; });
    if (it == site_index_.end() || it->first != s) return -1;
    return it->second;
}

std::int64_t Region::index_of(const EdgeCoord& e) const {
    auto it = std::lower_bound(edge_index_.begin(), edge_index_.end(), e,
                               [](const auto& a, const EdgeCoord& b) { return a.first < b; });
    if (it == edge_index_.end() || it->first != e) return -1;
    return it->second;
}

Region build_region(const Lattice& lat, RegionShape shape, std::uint64_t edge_budget) {
    Region r(lat, shape);
    r.materialize(edge_budget);
    return r;
}

}  // namespace tdz
