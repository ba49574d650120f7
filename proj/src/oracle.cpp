#include "tdz/oracle.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "tdz/parallel.hpp"

namespace tdz {

namespace {

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

void require_budget(const Region& region, int edge_budget) {
    if (!region.materialized()) throw ConfigError("exact enumeration needs a materialized region");
    const auto ne = region.edges().size();
    if (ne > static_cast<std::size_t>(edge_budget) || ne > 40)
        throw ResourceError("region " + region.describe() + " has " + std::to_string(ne) +
                            " edges, above the enumeration budget of " + std::to_string(edge_budget));
    if (region.vertices().size() > 64) throw ResourceError("exact enumeration supports at most 64 vertices");
}

// Enumerates all open-edge masks in parallel; fn(mask, popcount, counters)
// adds to the worker's counters, which are summed at the end.
template <typename Fn>
std::vector<std::vector<std::uint64_t>> enumerate(int num_edges, int num_series, int workers, Fn&& fn) {
    const std::uint64_t total = std::uint64_t{1} << num_edges;
    workers = resolve_workers(workers);
    const std::uint64_t w = std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), total);
    std::vector<std::vector<std::vector<std::uint64_t>>> partial(
        w, std::vector<std::vector<std::uint64_t>>(num_series, std::vector<std::uint64_t>(num_edges + 1, 0)));
    parallel_blocks(total, static_cast<int>(w), [&](int k, std::uint64_t begin, std::uint64_t end) {
        auto& acc = partial[static_cast<std::size_t>(k)];
        for (std::uint64_t mask = begin; mask < end; ++mask) fn(mask, std::popcount(mask), acc);
    });
    std::vector<std::vector<std::uint64_t>> out(num_series, std::vector<std::uint64_t>(num_edges + 1, 0));
    for (const auto& acc : partial)
        for (int s = 0; s < num_series; ++s)
            for (int j = 0; j <= num_edges; ++j) out[s][j] += acc[s][j];
    return out;
}

}  // namespace

double ExactPolynomial::eval(double p) const {
    double sum = 0.0;
    for (int j = 0; j <= num_edges; ++j) {
        if (coeffs[j] == 0) continue;
        sum += static_cast<double>(coeffs[j]) * std::pow(p, j) * std::pow(1.0 - p, num_edges - j);
    }
    return sum;
}

Rational ExactPolynomial::eval(const Rational& p) const {
    const Rational q = 1 - p;
    Rational sum = 0;
    std::vector<Rational> pp(num_edges + 1), qq(num_edges + 1);
    pp[0] = 1;
    qq[0] = 1;
    for (int j = 1; j <= num_edges; ++j) {
        pp[j] = pp[j - 1] * p;
        qq[j] = qq[j - 1] * q;
    }
    for (int j = 0; j <= num_edges; ++j)
        if (coeffs[j] != 0) sum += Rational(coeffs[j]) * pp[j] * qq[num_edges - j];
    return sum;
}

bool ExactPolynomial::well_formed() const {
    if (coeffs.size() != static_cast<std::size_t>(num_edges) + 1) return false;
    for (int j = 0; j <= num_edges; ++j)
        if (coeffs[j] > binomial(num_edges, j)) return false;
    return true;
}

std::string ExactPolynomial::to_string() const {
    std::ostringstream os;
    bool first = true;
    for (int j = 0; j <= num_edges; ++j) {
        if (coeffs[j] == 0) continue;
        os << (first ? "" : " + ") << coeffs[j] << " p^" << j << " q^" << (num_edges - j);
        first = false;
    }
    if (first) os << "0";
    return os.str();
}

DenseEvent compile_event(const ConnectionEvent& event, const Region& region) {
    if (region.vertices().size() > 64) throw ResourceError("dense events support at most 64 vertices");
    event.validate(region);
    DenseEvent out;
    out.source = static_cast<std::uint32_t>(region.index_of(event.source));
    for (std::uint32_t i = 0; i < region.vertices().size(); ++i)
        if (event.target.hit(region.vertices()[i])) out.target_mask |= std::uint64_t{1} << i;
    if (out.target_mask == 0) throw ConfigError("event target is empty inside " + region.describe());
    return out;
}

ExactPolynomial exact_probability(const ConnectionEvent& event, const Region& region, int edge_budget, int workers) {
    require_budget(region, edge_budget);
    const DenseEvent ev = compile_event(event, region);
    const DenseGraph g(region);
    const int ne = static_cast<int>(g.edge_count());
    auto counts = enumerate(ne, 1, workers, [&](std::uint64_t mask, int j, auto& acc) {
        if (g.reach(ev.source, mask) & ev.target_mask) ++acc[0][j];
    });
    return {ne, std::move(counts[0])};
}

int disjoint_path_count(const DenseGraph& g, const DenseEvent& a, std::uint64_t open_mask) {
    if (a.trivial()) return 2;
    const auto& ends = g.ends();
    const std::size_t nv = g.vertex_count();
    std::vector<int> flow(ends.size(), 0);  // along ends[e].first -> ends[e].second
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> adj(nv);
    for (std::uint32_t e = 0; e < ends.size(); ++e) {
        if (!(open_mask >> e & 1u)) continue;
        adj[ends[e].first].emplace_back(ends[e].second, e);
        adj[ends[e].second].emplace_back(ends[e].first, e);
    }
    int paths = 0;
    while (paths < 2) {
        std::vector<std::int64_t> via(nv, -1);  // edge used to enter
        std::vector<bool> seen(nv, false);
        std::vector<std::uint32_t> queue{a.source};
        seen[a.source] = true;
        std::int64_t sink = -1;
        for (std::size_t h = 0; h < queue.size() && sink < 0; ++h) {
            const std::uint32_t v = queue[h];
            for (const auto& [w, e] : adj[v]) {
                if (seen[w]) continue;
                const int dir = ends[e].first == v ? 1 : -1;
                if (1 - dir * flow[e] <= 0) continue;  // residual capacity
                seen[w] = true;
                via[w] = e;
                if (a.target_mask >> w & 1u) {
                    sink = w;
                    break;
                }
                queue.push_back(w);
            }
        }
        if (sink < 0) break;
        for (std::uint32_t v = static_cast<std::uint32_t>(sink); v != a.source;) {
            const auto e = static_cast<std::uint32_t>(via[v]);
            const bool forward = ends[e].second == v;
            flow[e] += forward ? 1 : -1;
            v = forward ? ends[e].first : ends[e].second;
        }
        ++paths;
    }
    return paths;
}

namespace {

struct PathSearch {
    const DenseGraph& g;
    const DenseEvent& a;
    const DenseEvent& b;
    std::uint64_t open_mask;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> adj;

    PathSearch(const DenseGraph& graph, const DenseEvent& ea, const DenseEvent& eb, std::uint64_t mask)
        : g(graph), a(ea), b(eb), open_mask(mask), adj(graph.vertex_count()) {
        const auto& ends = g.ends();
        for (std::uint32_t e = 0; e < ends.size(); ++e) {
            if (!(mask >> e & 1u)) continue;
            adj[ends[e].first].emplace_back(ends[e].second, e);
            adj[ends[e].second].emplace_back(ends[e].first, e);
        }
    }

    // Depth-first over simple paths of A, stopping each path at its first
    // target vertex (longer paths contain that witness).
    bool dfs(std::uint32_t v, std::uint64_t visited, std::uint64_t used) const {
        if (a.target_mask >> v & 1u) return g.reach(b.source, open_mask & ~used) & b.target_mask;
        for (const auto& [w, e] : adj[v]) {
            if (visited >> w & 1u) continue;
            if (dfs(w, visited | std::uint64_t{1} << w, used | std::uint64_t{1} << e)) return true;
        }
        return false;
    }
};

}  // namespace

bool disjoint_occurrence_by_paths(const DenseGraph& g, const DenseEvent& a, const DenseEvent& b,
                                  std::uint64_t open_mask) {
    if (!(g.reach(a.source, open_mask) & a.target_mask)) return false;
    if (!(g.reach(b.source, open_mask) & b.target_mask)) return false;
    PathSearch search(g, a, b, open_mask);
    return search.dfs(a.source, std::uint64_t{1} << a.source, 0);
}

bool disjoint_occurrence(const DenseGraph& g, const DenseEvent& a, const DenseEvent& b, std::uint64_t open_mask) {
    // An event that holds on the empty witness leaves every edge to the other.
    if (a.trivial()) return g.reach(b.source, open_mask) & b.target_mask;
    if (b.trivial()) return g.reach(a.source, open_mask) & a.target_mask;
    if (a.source == b.source && a.target_mask == b.target_mask) return disjoint_path_count(g, a, open_mask) >= 2;
    return disjoint_occurrence_by_paths(g, a, b, open_mask);
}

PairPolynomials exact_pair(const ConnectionEvent& a, const ConnectionEvent& b, const Region& region,
                           bool with_disjoint, int edge_budget, int workers) {
    require_budget(region, edge_budget);
    const DenseEvent ea = compile_event(a, region);
    const DenseEvent eb = compile_event(b, region);
    const DenseGraph g(region);
    const int ne = static_cast<int>(g.edge_count());
    auto counts = enumerate(ne, 4, workers, [&](std::uint64_t mask, int j, auto& acc) {
        const bool ha = g.reach(ea.source, mask) & ea.target_mask;
        const bool hb = ea.source == eb.source ? (g.reach(ea.source, mask) & eb.target_mask) != 0
                                               : (g.reach(eb.source, mask) & eb.target_mask) != 0;
        if (ha) ++acc[0][j];
        if (hb) ++acc[1][j];
        if (ha && hb) {
            ++acc[2][j];
            if (with_disjoint && disjoint_occurrence(g, ea, eb, mask)) ++acc[3][j];
        }
    });
    return {{ne, counts[0]}, {ne, counts[1]}, {ne, counts[2]}, {ne, counts[3]}};
}

InequalityCheck check_fkg(const ConnectionEvent& a, const ConnectionEvent& b, const Region& region, const Rational& p,
                          int edge_budget, int workers) {
    const auto polys = exact_pair(a, b, region, false, edge_budget, workers);
    const Rational pa = polys.a.eval(p), pb = polys.b.eval(p), pab = polys.both.eval(p);
    const Rational rhs = pa * pb;
    return {pab >= rhs, static_cast<double>(pab), static_cast<double>(rhs), true};
}

InequalityCheck check_bk(const ConnectionEvent& a, const ConnectionEvent& b, const Region& region, const Rational& p,
                         int edge_budget, int workers) {
    const auto polys = exact_pair(a, b, region, true, edge_budget, workers);
    const Rational pa = polys.a.eval(p), pb = polys.b.eval(p), pd = polys.disjoint.eval(p);
    const Rational rhs = pa * pb;
    return {pd <= rhs, static_cast<double>(pd), static_cast<double>(rhs), true};
}

InequalityCheck check_power_inequality(const ConnectionEvent& a, const Region& region, double p, double gamma,
                                       int edge_budget, int workers) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("power inequality needs 0 < p < 1");
    if (!(gamma >= 1.0)) throw DomainError("power inequality needs gamma >= 1");
    const auto poly = exact_probability(a, region, edge_budget, workers);
    const double lhs = poly.eval(std::pow(p, gamma));
    const double rhs = std::pow(poly.eval(p), gamma);
    return {lhs <= rhs + 1e-12, lhs, rhs, false};
}

McComparison mc_vs_exact(const ConnectionEvent& event, const Region& region, double p, std::uint64_t trials,
                         std::uint64_t seed, int workers, int edge_budget) {
    if (trials == 0) throw ConfigError("mc_vs_exact needs at least one trial");
    const auto poly = exact_probability(event, region, edge_budget, workers);
    const DenseEvent ev = compile_event(event, region);
    const DenseGraph g(region);
    const Lattice& lat = region.lattice();
    const auto& edges = region.edges();
    const auto hits = parallel_map<std::uint8_t>(trials, workers, [&](std::uint64_t t) -> std::uint8_t {
        const WeightField field(lat, seed, t);
        std::uint64_t mask = 0;
        for (std::size_t e = 0; e < edges.size(); ++e)
            if (field.weight(edges[e]) < p) mask |= std::uint64_t{1} << e;
        return (g.reach(ev.source, mask) & ev.target_mask) ? 1 : 0;
    });
    McComparison out;
    out.trials = trials;
    for (auto h : hits) out.hits += h;
    out.empirical = static_cast<double>(out.hits) / static_cast<double>(trials);
    out.exact = poly.eval(p);
    out.sigma = std::sqrt(out.exact * (1.0 - out.exact) / static_cast<double>(trials));
    out.pass = std::abs(out.empirical - out.exact) <= 3.0 * out.sigma + 1e-15;
    return out;
}

}  // namespace tdz
