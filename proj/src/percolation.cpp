#include "tdz/percolation.hpp"

#include <algorithm>
#include <queue>

#include <absl/container/flat_hash_map.h>

namespace tdz {

void ConnectionEvent::validate(const Region& region) const {
    const Lattice& lat = region.lattice();
    if (!lat.valid(source.tree)) throw EncodingError("event source is not a valid tree vertex");
    if (!region.contains(source)) throw ConfigError("event source " + lat.format(source) + " lies outside " + region.describe());
    switch (target.kind) {
        case ConnectionTarget::Kind::Site:
            if (!region.contains(target.site))
                throw ConfigError("target " + lat.format(target.site) + " lies outside " + region.describe());
            break;
        case ConnectionTarget::Kind::Fiber:
            if (!region.contains(SiteCoord{target.fiber, 0}) && !region.contains(SiteCoord{target.fiber, source.layer}))
                throw ConfigError("fiber of " + lat.format(target.fiber) + " misses " + region.describe());
            break;
        case ConnectionTarget::Kind::SphereFiber:
            if (!region.contains(SiteCoord{TreeVertex{target.radius, 0}, 0}))
                throw ConfigError("tree sphere " + std::to_string(target.radius) + " misses " + region.describe());
            break;
        case ConnectionTarget::Kind::BallBoundary:
            if (region.shape().kind != RegionKind::EdgeSet &&
                static_cast<std::int64_t>(target.radius) > region.shape().radius + region.shape().half_width)
                throw ConfigError("distance " + std::to_string(target.radius) + " not reachable inside " + region.describe());
            break;
    }
}

std::vector<SiteCoord> sample_cluster(const SiteCoord& origin, const ConfigurationView& view, std::uint64_t site_budget) {
    if (!view.region->contains(origin)) throw ConfigError("cluster origin lies outside the region");
    std::vector<SiteCoord> out;
    explore_cluster(
        origin, view,
        [&](const SiteCoord& s) {
            out.push_back(s);
            return true;
        },
        site_budget);
    return out;
}

bool occurs(const ConnectionEvent& event, const ConfigurationView& view, std::uint64_t site_budget) {
    bool hit = false;
    explore_cluster(
        event.source, view,
        [&](const SiteCoord& s) {
            hit = event.target.hit(s);
            return !hit;
        },
        site_budget);
    return hit;
}

namespace {

struct QueueItem {
    double key;
    std::uint64_t order;  // insertion counter; makes ties deterministic
    SiteCoord site;
    bool operator>(const QueueItem& o) const { return key != o.key ? key > o.key : order > o.order; }
};

using MinQueue = std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>>;

}  // namespace

BottleneckResult bottleneck_threshold(const ConnectionEvent& event, const WeightField& field, const Region& region,
                                      double p_cap, std::uint64_t site_budget) {
    const Lattice& lat = field.lattice();
    BottleneckResult result;
    if (event.target.hit(event.source)) {
        result.threshold = 0.0;
        result.reachable = true;
        return result;
    }
    // Minimax Dijkstra: keys pop in nondecreasing order of path bottleneck.
    absl::flat_hash_map<SiteCoord, std::pair<SiteCoord, EdgeCoord>> parent;
    absl::flat_hash_set<SiteCoord> done;
    MinQueue queue;
    std::uint64_t order = 0;
    queue.push({0.0, order++, event.source});
    parent.emplace(event.source, std::make_pair(event.source, EdgeCoord{}));
    absl::flat_hash_map<SiteCoord, double> best{{event.source, 0.0}};
    while (!queue.empty()) {
        const QueueItem top = queue.top();
        queue.pop();
        if (!done.insert(top.site).second) continue;
        if (event.target.hit(top.site)) {
            result.threshold = top.key;
            result.reachable = true;
            for (SiteCoord s = top.site; s != event.source;) {
                const auto& [prev, edge] = parent.at(s);
                result.witness.push_back(edge);
                s = prev;
            }
            std::reverse(result.witness.begin(), result.witness.end());
            return result;
        }
        if (done.size() > site_budget)
            throw ResourceError("bottleneck search exceeded the site budget of " + std::to_string(site_budget));
        lat.for_each_incident(top.site, [&](const SiteCoord& t, const EdgeCoord& e) {
            if (done.contains(t) || !region.contains(e)) return;
            const double key = std::max(top.key, field.weight(e));
            if (key >= p_cap) return;
            auto it = best.find(t);
            if (it != best.end() && it->second <= key) return;
            best[t] = key;
            parent[t] = {top.site, e};
            queue.push({key, order++, t});
        });
    }
    return result;
}

std::vector<double> reach_thresholds(const WeightField& field, const Region& region, std::uint32_t r_max, double p_cap,
                                     std::uint64_t site_budget) {
    const Lattice& lat = field.lattice();
    std::vector<double> out(r_max + 1, 1.0);
    out[0] = 0.0;
    std::uint32_t reached = 0;
    absl::flat_hash_set<SiteCoord> done;
    absl::flat_hash_map<SiteCoord, double> best;
    MinQueue queue;
    std::uint64_t order = 0;
    const SiteCoord origin{};
    queue.push({0.0, order++, origin});
    best[origin] = 0.0;
    while (!queue.empty() && reached < r_max) {
        const QueueItem top = queue.top();
        queue.pop();
        if (!done.insert(top.site).second) continue;
        const std::uint64_t dist = Lattice::norm(top.site);
        while (reached < dist && reached < r_max) out[++reached] = top.key;
        if (done.size() > site_budget)
            throw ResourceError("invasion exceeded the site budget of " + std::to_string(site_budget));
        lat.for_each_incident(top.site, [&](const SiteCoord& t, const EdgeCoord& e) {
            if (done.contains(t) || !region.contains(e)) return;
            const double key = std::max(top.key, field.weight(e));
            if (key >= p_cap) return;
            auto it = best.find(t);
            if (it != best.end() && it->second <= key) return;
            best[t] = key;
            queue.push({key, order++, t});
        });
    }
    return out;
}

DenseGraph::DenseGraph(const Region& region) : ends_(region.edge_ends()) {
    if (!region.materialized()) throw ConfigError("dense graph needs a materialized region");
    adj_.resize(region.vertices().size());
    for (std::uint32_t i = 0; i < ends_.size(); ++i) {
        adj_[ends_[i].first].emplace_back(ends_[i].second, i);
        adj_[ends_[i].second].emplace_back(ends_[i].first, i);
    }
}

std::uint64_t DenseGraph::reach(std::uint32_t src, std::uint64_t open_mask) const {
    std::uint64_t seen = std::uint64_t{1} << src;
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = src;
    while (top > 0) {
        const std::uint32_t v = stack[--top];
        for (const auto& [w, e] : adj_[v]) {
            if (!(open_mask >> e & 1u) || (seen >> w & 1u)) continue;
            seen |= std::uint64_t{1} << w;
            stack[top++] = w;
        }
    }
    return seen;
}

std::vector<bool> DenseGraph::reach_any(std::uint32_t src, const std::vector<bool>& open) const {
    std::vector<bool> seen(adj_.size(), false);
    std::vector<std::uint32_t> stack{src};
    seen[src] = true;
    while (!stack.empty()) {
        const std::uint32_t v = stack.back();
        stack.pop_back();
        for (const auto& [w, e] : adj_[v]) {
            if (!open[e] || seen[w]) continue;
            seen[w] = true;
            stack.push_back(w);
        }
    }
    return seen;
}

}  // namespace tdz
