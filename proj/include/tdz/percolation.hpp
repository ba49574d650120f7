#pragma once

// Percolation configurations on a region, driven by a WeightField, and the
// connectivity queries built on them.

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include "tdz/lattice.hpp"
#include "tdz/weight_field.hpp"

namespace tdz {

// omega_p restricted to a region: e is open iff e lies in the region and X_e < p.
struct ConfigurationView {
    const WeightField* field;
    double p;
    const Region* region;

    bool open(const EdgeCoord& e) const { return region->contains(e) && field->weight(e) < p; }
};

struct ConnectionTarget {
    enum class Kind {
        Site,         // a single site (n, k)
        Fiber,        // pi^{-1}(x) restricted to the region
        SphereFiber,  // dB_T(n) x layers
        BallBoundary  // sites at graph distance >= radius from o
    };
    Kind kind = Kind::Site;
    SiteCoord site;
    TreeVertex fiber;
    std::uint32_t radius = 0;

    bool hit(const SiteCoord& s) const {
        switch (kind) {
            case Kind::Site: return s == site;
            case Kind::Fiber: return s.tree == fiber;
            case Kind::SphereFiber: return s.tree.depth == radius;
            case Kind::BallBoundary: return Lattice::norm(s) >= radius;
        }
        return false;
    }
};

// (source <-> target): an open path joins the source site to the target set.
struct ConnectionEvent {
    SiteCoord source;
    ConnectionTarget target;

    static ConnectionEvent to_site(SiteCoord from, SiteCoord to) {
        return {from, {ConnectionTarget::Kind::Site, to, {}, 0}};
    }
    static ConnectionEvent to_fiber(SiteCoord from, TreeVertex x) {
        return {from, {ConnectionTarget::Kind::Fiber, {}, x, 0}};
    }
    static ConnectionEvent to_sphere_fiber(SiteCoord from, std::uint32_t n) {
        return {from, {ConnectionTarget::Kind::SphereFiber, {}, {}, n}};
    }
    static ConnectionEvent to_ball_boundary(SiteCoord from, std::uint32_t r) {
        return {from, {ConnectionTarget::Kind::BallBoundary, {}, {}, r}};
    }

    // Throws ConfigError when the source is outside the region or no target
    // site lies in it.
    void validate(const Region& region) const;
};

inline constexpr std::uint64_t kDefaultSiteBudget = 50'000'000;

// Breadth-first walk of the open cluster of origin, revealing weights only
// on edges incident to visited sites. visit(site) returns false to stop.
// Returns the number of sites visited.
template <typename Visit>
std::uint64_t explore_cluster(const SiteCoord& origin, const ConfigurationView& view, Visit&& visit,
                              std::uint64_t site_budget = kDefaultSiteBudget) {
    const Lattice& lat = view.field->lattice();
    absl::flat_hash_set<SiteCoord> seen;
    std::vector<SiteCoord> frontier{origin};
    seen.insert(origin);
    std::size_t head = 0;
    std::uint64_t visited = 0;
    while (head < frontier.size()) {
        const SiteCoord s = frontier[head++];
        ++visited;
        if (!visit(s)) return visited;
        if (view.p <= 0.0) continue;
        lat.for_each_incident(s, [&](const SiteCoord& t, const EdgeCoord& e) {
            if (seen.contains(t) || !view.open(e)) return;
            seen.insert(t);
            frontier.push_back(t);
        });
        if (frontier.size() > site_budget)
            throw ResourceError("cluster exploration exceeded the site budget of " + std::to_string(site_budget));
        // Drop the consumed prefix once it dominates the buffer.
        if (head > 4096 && head * 2 > frontier.size()) {
            frontier.erase(frontier.begin(), frontier.begin() + static_cast<std::ptrdiff_t>(head));
            head = 0;
        }
    }
    return visited;
}

// Minimax invasion from origin: visit(site, key) is called once per site in
// nondecreasing key order, where key is the smallest p-threshold at which
// the site joins the cluster of origin (the site is connected at p iff
// key < p). The origin is reported with key -1. Edges with weight >= p_cap
// are never crossed. Ties are broken by insertion order.
template <typename Visit>
void invade(const SiteCoord& origin, const WeightField& field, const Region& region, double p_cap, Visit&& visit,
            std::uint64_t site_budget = kDefaultSiteBudget);

// Open cluster of origin inside the view's region.
std::vector<SiteCoord> sample_cluster(const SiteCoord& origin, const ConfigurationView& view,
                                      std::uint64_t site_budget = kDefaultSiteBudget);

// True iff an open path inside the region joins source to target; stops at
// the first target site reached.
bool occurs(const ConnectionEvent& event, const ConfigurationView& view,
            std::uint64_t site_budget = kDefaultSiteBudget);

struct BottleneckResult {
    double threshold = 1.0;             // min over paths of the max edge weight
    std::vector<EdgeCoord> witness;     // a path achieving it, source to target
    bool reachable = false;
};

// For one field, the event occurs exactly for p > threshold. Unreachable
// targets give threshold 1 with an empty witness; a source inside the
// target gives threshold 0 (the event holds for every p, including 0).
// Sites whose bottleneck value reaches p_cap are not expanded; if the target
// is only reachable at or above p_cap the result is reported unreachable.
BottleneckResult bottleneck_threshold(const ConnectionEvent& event, const WeightField& field, const Region& region,
                                      double p_cap = 1.0, std::uint64_t site_budget = kDefaultSiteBudget);

// Invasion from o: for every r in 0..r_max the smallest p at which o connects
// to graph distance r inside the region. Entries are 1.0 when distance r is
// not reached below p_cap.
std::vector<double> reach_thresholds(const WeightField& field, const Region& region, std::uint32_t r_max,
                                     double p_cap = 1.0, std::uint64_t site_budget = kDefaultSiteBudget);

// Dense view of a small materialized region, used where many configurations
// of the same edge set are inspected.
class DenseGraph {
public:
    explicit DenseGraph(const Region& region);

    std::size_t vertex_count() const { return adj_.size(); }
    std::size_t edge_count() const { return ends_.size(); }
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& ends() const { return ends_; }

    // Vertex bitmask reachable from src when the edges in open_mask are open.
    // Requires at most 64 vertices and 64 edges.
    std::uint64_t reach(std::uint32_t src, std::uint64_t open_mask) const;
    // General version for larger materialized regions.
    std::vector<bool> reach_any(std::uint32_t src, const std::vector<bool>& open) const;

private:
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> adj_;  // (neighbor, edge)
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ends_;
};

namespace detail {

struct InvasionItem {
    double key;
    std::uint64_t order;
    SiteCoord site;
    bool operator>(const InvasionItem& o) const { return key != o.key ? key > o.key : order > o.order; }
};

}  // namespace detail

template <typename Visit>
void invade(const SiteCoord& origin, const WeightField& field, const Region& region, double p_cap, Visit&& visit,
            std::uint64_t site_budget) {
    const Lattice& lat = field.lattice();
    struct Slot {
        double key;
        bool done;
    };
    absl::flat_hash_map<SiteCoord, Slot> state;
    std::priority_queue<detail::InvasionItem, std::vector<detail::InvasionItem>, std::greater<>> queue;
    std::uint64_t order = 0;
    std::uint64_t settled = 0;
    queue.push({-1.0, order++, origin});
    state[origin] = {-1.0, false};
    while (!queue.empty()) {
        const detail::InvasionItem top = queue.top();
        queue.pop();
        Slot& slot = state[top.site];
        if (slot.done || top.key > slot.key) continue;
        slot.done = true;
        if (++settled > site_budget)
            throw ResourceError("invasion exceeded the site budget of " + std::to_string(site_budget));
        visit(top.site, top.key);
        lat.for_each_incident(top.site, [&](const SiteCoord& t, const EdgeCoord& e) {
            if (!region.contains(e)) return;
            const double w = field.weight(e);
            if (w >= p_cap) return;
            const double key = std::max(top.key, w);
            auto [it, fresh] = state.try_emplace(t, Slot{key, false});
            if (!fresh) {
                if (it->second.done || it->second.key <= key) return;
                it->second.key = key;
            }
            queue.push({key, order++, t});
        });
    }
}

}  // namespace tdz
