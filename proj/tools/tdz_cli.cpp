// tdz: command-line front end over the C API in tdz/tdz.h.
//
// Series go out as CSV, verdicts as JSON. With --out, a sibling
// <out>.manifest.json records the resolved configuration, the library
// version, a timestamp and the wall time; the data file itself holds no
// timing so reruns with the same seed are byte-identical.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdz/tdz.h"

namespace {

using nlohmann::json;

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitResource = 3;
constexpr int kExitUndecided = 4;

struct Failure {
    int code;
    std::string message;
};

int exit_code(tdz_status s) {
    switch (s) {
        case TDZ_OK: return 0;
        case TDZ_ERR_CONFIG:
        case TDZ_ERR_DOMAIN:
        case TDZ_ERR_ENCODING: return kExitConfig;
        case TDZ_ERR_RESOURCE: return kExitResource;
        case TDZ_UNDECIDED: return kExitUndecided;
        default: return kExitCheckFailed;
    }
}

void check(tdz_status s) {
    if (s != TDZ_OK) throw Failure{exit_code(s), tdz_last_error()};
}

[[noreturn]] void config_error(const std::string& msg) { throw Failure{kExitConfig, msg}; }

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string owned(char* s) {
    std::string out = s ? s : "";
    tdz_free_string(s);
    return out;
}

// "ball:K" or "strip:R:M".
tdz_region_shape parse_region(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    try {
        if (parts.size() == 2 && parts[0] == "ball") return {TDZ_REGION_BALL, std::stoi(parts[1]), 0};
        if (parts.size() == 3 && parts[0] == "strip")
            return {TDZ_REGION_STRIP, std::stoi(parts[1]), std::stoi(parts[2])};
    } catch (const std::exception&) {
    }
    config_error("region '" + text + "' is not of the form ball:K or strip:R:M");
}

std::string describe(int d, tdz_region_shape shape) {
    tdz_region* r = nullptr;
    check(tdz_region_create(d, shape, &r));
    char* s = nullptr;
    const tdz_status st = tdz_region_describe(r, &s);
    tdz_region_destroy(r);
    check(st);
    return owned(s);
}

struct Rate {
    tdz_rate* h = nullptr;
    Rate() = default;
    explicit Rate(tdz_rate* r) : h(r) {}
    Rate(Rate&& o) noexcept : h(o.h) { o.h = nullptr; }
    Rate(const Rate&) = delete;
    ~Rate() { tdz_rate_destroy(h); }
};

// Options shared by every sampling subcommand.
struct Common {
    int d = 3;
    std::uint64_t seed = 1;
    std::uint64_t trials = 2000;
    std::uint64_t max_trials = 0;
    int workers = 0;
    int batches = 32;
    std::uint64_t min_hits = 100;
    std::string out;

    tdz_sampling sampling() const {
        tdz_sampling s;
        tdz_sampling_default(&s);
        s.trials = trials;
        s.max_trials = max_trials;
        s.seed = seed;
        s.workers = workers;
        s.batches = batches;
        s.min_hits = min_hits;
        return s;
    }
};

void add_d(CLI::App* sub, Common& c) {
    sub->add_option("--d", c.d, "Tree degree d >= 3")->check(CLI::Range(3, 64))->capture_default_str();
    sub->add_option("--out", c.out, "Output file; a manifest is written beside it (default: stdout)");
}

void add_sampling(CLI::App* sub, Common& c, std::uint64_t trials) {
    c.trials = trials;
    sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
    sub->add_option("--trials", c.trials, "Independent weight fields")->capture_default_str();
    sub->add_option("--max-trials", c.max_trials, "Adaptive trial cap (0 disables)")->capture_default_str();
    sub->add_option("--workers", c.workers, "Worker threads (0: TDZ_WORKERS or all cores)")->capture_default_str();
    sub->add_option("--batches", c.batches, "Batches for interval estimates")->capture_default_str();
    sub->add_option("--min-hits", c.min_hits, "Hits below which a point is censored")->capture_default_str();
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) s += ',';
        s += cells[i];
    }
    return s + '\n';
}

std::string iso_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void emit(const std::string& data, const Common& c, const CLI::App& app, const CLI::App& sub,
          const std::vector<std::string>& argv, double wall_time, const json& extra) {
    if (c.out.empty()) {
        std::cout << data;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw Failure{kExitConfig, "cannot open output file " + c.out};
    f << data;
    json m;
    m["artifact"] = "tdz";
    m["version"] = tdz_version();
    m["command"] = sub.get_name();
    m["argv"] = argv;
    m["config"] = app.config_to_str(true, false);
    m["output"] = c.out;
    m["timestamp"] = iso_now();
    m["wall_time"] = wall_time;
    for (const auto& [k, v] : extra.items()) m[k] = v;
    std::ofstream mf(c.out + ".manifest.json", std::ios::binary);
    if (!mf) throw Failure{kExitConfig, "cannot open manifest file " + c.out + ".manifest.json"};
    mf << m.dump(2) << '\n';
}

void print_warnings(const tdz_rate* r) {
    for (std::size_t i = 0; i < tdz_rate_warning_count(r); ++i)
        std::cerr << "warning: " << tdz_rate_quantity(r) << ": " << tdz_rate_warning(r, i) << '\n';
}

const std::string kSeriesHeader = "quantity,n,p,mean,ci_low,ci_high,trials,region,seed,censored\n";
const std::string kRateHeader =
    "quantity,p,sup_root,slope_fit,slope_low,slope_high,band_low,band_high,fit_from,fit_to,stabilized,capped,"
    "trials,region,seed\n";

std::string rate_rows(const std::vector<Rate>& rates, std::uint64_t seed, bool series) {
    std::string out = series ? kSeriesHeader : kRateHeader;
    for (const auto& r : rates) {
        tdz_rate_summary s;
        check(tdz_rate_summary_get(r.h, &s));
        const std::string q = tdz_rate_quantity(r.h);
        const std::string region = tdz_rate_region(r.h);
        if (series) {
            const std::string sq = q == "alpha" ? "tau_series" : "tau_vertical";
            for (std::size_t i = 0; i < s.points; ++i) {
                tdz_series_point pt;
                check(tdz_rate_point(r.h, i, &pt));
                out += csv_row({sq, std::to_string(pt.index), num(s.p), num(pt.estimate.mean), num(pt.estimate.ci_low),
                                num(pt.estimate.ci_high), std::to_string(pt.estimate.samples), region,
                                std::to_string(seed), pt.censored ? "true" : "false"});
            }
            continue;
        }
        std::uint64_t trials = 0;
        if (s.points > 0) {
            tdz_series_point pt;
            check(tdz_rate_point(r.h, 0, &pt));
            trials = pt.estimate.samples;
        }
        out += csv_row({q, num(s.p), num(s.sup_root), num(s.slope_fit), num(s.slope_low), num(s.slope_high),
                        num(s.band_low), num(s.band_high), std::to_string(s.fit_from), std::to_string(s.fit_to),
                        s.stabilized ? "true" : "false", s.capped ? "true" : "false", std::to_string(trials), region,
                        std::to_string(seed)});
    }
    return out;
}

std::vector<tdz_region_shape> parse_schedule(const std::vector<std::string>& specs) {
    std::vector<tdz_region_shape> out;
    for (const auto& s : specs) out.push_back(parse_region(s));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bond percolation on T_d x Z: decay rates, layer sums and p_c estimates"};
    app.set_config("--config", "", "key = value configuration file; command-line flags take precedence");
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tdz_version()));
    const std::vector<std::string> args(argv, argv + argc);

    // tau
    Common tau_c;
    int tau_nmax = 8;
    std::vector<int> tau_ns;
    std::vector<double> tau_ps{0.3};
    std::string tau_target = "point", tau_region;
    auto* tau = app.add_subcommand("tau", "Two-point function along the canonical ray");
    add_d(tau, tau_c);
    add_sampling(tau, tau_c, 2000);
    tau->add_option("--nmax", tau_nmax, "Largest tree distance (n = 1..nmax)")->capture_default_str();
    tau->add_option("--n", tau_ns, "Explicit tree distances (overrides --nmax)")->delimiter(',');
    tau->add_option("--p", tau_ps, "Edge probabilities")->delimiter(',')->capture_default_str();
    tau->add_option("--target", tau_target, "point: (v_n, 0); fiber: the line over v_n")
        ->check(CLI::IsMember({"point", "fiber"}))
        ->capture_default_str();
    tau->add_option("--region", tau_region, "ball:K or strip:R:M (default strip:nmax+2:8)");

    // alpha
    Common al_c;
    std::vector<double> al_ps{0.25};
    int al_nmax = 12, al_fit_from = 0;
    std::string al_target = "fiber";
    std::vector<std::string> al_schedule;
    double al_eps = 1e-3;
    bool al_series = false, al_schonmann = false;
    auto* alpha = app.add_subcommand("alpha", "Horizontal decay rate alpha(p)");
    add_d(alpha, al_c);
    add_sampling(alpha, al_c, 2000);
    alpha->add_option("--p", al_ps, "Edge probabilities (one coupled grid)")->delimiter(',')->capture_default_str();
    alpha->add_option("--nmax", al_nmax, "Largest tree distance")->capture_default_str();
    alpha->add_option("--fit-from", al_fit_from, "First index of the slope fit (0: nmax/2)")->capture_default_str();
    alpha->add_option("--target", al_target, "fiber or point")
        ->check(CLI::IsMember({"point", "fiber"}))
        ->capture_default_str();
    alpha->add_option("--schedule", al_schedule, "Nested regions for stabilization, e.g. strip:14:2,strip:14:4")
        ->delimiter(',');
    alpha->add_option("--eps-stab", al_eps, "Stabilization threshold")->capture_default_str();
    alpha->add_flag("--series", al_series, "Emit the underlying tau series instead of rate rows");
    alpha->add_flag("--schonmann", al_schonmann, "Emit a JSON verdict comparing alpha with 1/sqrt(d-1)");

    // beta
    Common be_c;
    std::vector<double> be_ps{0.25};
    int be_mmax = 12, be_fit_from = 0;
    std::vector<std::string> be_schedule;
    double be_eps = 1e-3;
    bool be_series = false;
    auto* beta = app.add_subcommand("beta", "Vertical decay rate beta(p)");
    add_d(beta, be_c);
    add_sampling(beta, be_c, 2000);
    beta->add_option("--p", be_ps, "Edge probabilities")->delimiter(',')->capture_default_str();
    beta->add_option("--mmax", be_mmax, "Largest layer distance")->capture_default_str();
    beta->add_option("--fit-from", be_fit_from, "First index of the slope fit (0: mmax/2)")->capture_default_str();
    beta->add_option("--schedule", be_schedule, "Nested regions for stabilization")->delimiter(',');
    beta->add_option("--eps-stab", be_eps, "Stabilization threshold")->capture_default_str();
    beta->add_flag("--series", be_series, "Emit the underlying tau series instead of rate rows");

    // eta
    Common et_c;
    double et_p = 0.25, et_beta_upper = -1.0, et_eps_tail = 1e-3;
    int et_nmax = 8, et_fit_from = 0, et_k_cut = -1;
    std::string et_region;
    auto* eta = app.add_subcommand("eta", "Layer sums I_n(p) and their rate eta(p)");
    add_d(eta, et_c);
    add_sampling(eta, et_c, 2000);
    eta->add_option("--p", et_p, "Edge probability")->capture_default_str();
    eta->add_option("--nmax", et_nmax, "Largest tree distance")->capture_default_str();
    eta->add_option("--fit-from", et_fit_from, "First index of the slope fit (0: nmax/2)")->capture_default_str();
    eta->add_option("--k-cut", et_k_cut, "Layer truncation K (default: from --beta-upper and --eps-tail)");
    eta->add_option("--beta-upper", et_beta_upper, "Upper bound on beta(p) (default: estimated)");
    eta->add_option("--eps-tail", et_eps_tail, "Target bound on the truncated tail")->capture_default_str();
    eta->add_option("--region", et_region, "ball:K or strip:R:M (default strip:nmax+2:K+2)");

    // jm
    Common jm_c;
    double jm_p = 0.25, jm_z = 1.0, jm_alpha_upper = -1.0;
    int jm_ncut = 12, jm_mmax = 4;
    unsigned jm_ray = 0;
    std::string jm_region, jm_estimator = "sphere";
    bool jm_no_window = false;
    auto* jm = app.add_subcommand("jm", "Level-weighted sums J_m(p, z) and the rate phi(p, z)");
    add_d(jm, jm_c);
    add_sampling(jm, jm_c, 2000);
    jm->add_option("--p", jm_p, "Edge probability")->capture_default_str();
    jm->add_option("--z", jm_z, "Weight parameter z")->capture_default_str();
    jm->add_option("--ncut", jm_ncut, "Tree depth truncation")->capture_default_str();
    jm->add_option("--mmax", jm_mmax, "Largest layer m")->capture_default_str();
    jm->add_option("--alpha-upper", jm_alpha_upper, "Upper bound on alpha(p) (default: estimated)");
    jm->add_flag("--no-window", jm_no_window, "Allow z outside (alpha, 1/(alpha (d-1))); no tail bound");
    jm->add_option("--estimator", jm_estimator, "sphere or level")
        ->check(CLI::IsMember({"sphere", "level"}))
        ->capture_default_str();
    jm->add_option("--ray", jm_ray, "Reference ray for the level estimator")->capture_default_str();
    jm->add_option("--region", jm_region, "ball:K or strip:R:M (default strip:ncut+2:mmax+4)");

    // an-table
    Common an_c;
    int an_nmax = 10;
    std::vector<double> an_zs{0.5, 1.0};
    auto* an = app.add_subcommand("an-table", "a_n(z) by direct sum and closed form");
    add_d(an, an_c);
    an->add_option("--nmax", an_nmax, "Largest n")->capture_default_str();
    an->add_option("--z", an_zs, "z values")->delimiter(',')->capture_default_str();

    // pc
    Common pc_c;
    std::string pc_method = "alpha";
    double pc_tol = 0.02;
    int pc_nmax = 16, pc_rmax = 0, pc_rref = 0, pc_esc = 3, pc_probes = 60, pc_scan = 9, pc_half_width = 16;
    auto* pc = app.add_subcommand("pc", "Bracket p_c by CI-separated bisection");
    add_d(pc, pc_c);
    add_sampling(pc, pc_c, 4000);
    pc->add_option("--method", pc_method, "alpha: invert alpha at 1/(d-1); direct: one-arm scaling")
        ->check(CLI::IsMember({"alpha", "direct"}))
        ->capture_default_str();
    pc->add_option("--tol", pc_tol, "Target bracket width")->capture_default_str();
    pc->add_option("--nmax", pc_nmax, "alpha method: largest tree distance")->capture_default_str();
    pc->add_option("--half-width", pc_half_width, "alpha method: strip half width")->capture_default_str();
    pc->add_option("--rmax", pc_rmax, "direct method: outer radius (0: min(40, max depth))")->capture_default_str();
    pc->add_option("--rref", pc_rref, "direct method: reference radius (0: rmax/2)")->capture_default_str();
    pc->add_option("--max-escalations", pc_esc, "Escalation levels per probe")->capture_default_str();
    pc->add_option("--max-probes", pc_probes, "Probe budget")->capture_default_str();
    pc->add_option("--scan-points", pc_scan, "Points in the initial upward scan")->capture_default_str();

    // verify
    Common ve_c;
    std::string ve_suite = "all";
    auto* verify = app.add_subcommand("verify", "Run self-checks; exit 0 iff all pass");
    ve_c.seed = 1;
    verify->add_option("--suite", ve_suite, "combinatorics, lattice, oracle, coupling or all")
        ->check(CLI::IsMember({"combinatorics", "lattice", "oracle", "coupling", "all"}))
        ->capture_default_str();
    verify->add_option("--seed", ve_c.seed, "Master seed")->capture_default_str();
    verify->add_option("--workers", ve_c.workers, "Worker threads")->capture_default_str();
    verify->add_option("--out", ve_c.out, "Output file (default: stdout)");

    // oracle
    Common or_c;
    std::string or_region = "ball:1", or_target;
    int or_layer = 0;
    std::vector<double> or_ps{0.25, 0.5, 0.75};
    auto* oracle = app.add_subcommand("oracle", "Exact connection probability on a tiny region");
    add_d(oracle, or_c);
    oracle->add_option("--region", or_region, "ball:K or strip:R:M with at most 24 edges")->capture_default_str();
    oracle->add_option("--target", or_target, "Tree vertex as comma-separated branch indices (empty: origin)");
    oracle->add_option("--layer", or_layer, "Target layer")->capture_default_str();
    oracle->add_option("--p", or_ps, "Evaluation points")->delimiter(',')->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

    try {
        if (tau->parsed()) {
            auto& c = tau_c;
            std::vector<int> ns = tau_ns;
            if (ns.empty())
                for (int n = 1; n <= tau_nmax; ++n) ns.push_back(n);
            int deepest = 0;
            for (int n : ns) deepest = std::max(deepest, n);
            const tdz_region_shape shape =
                tau_region.empty() ? tdz_region_shape{TDZ_REGION_STRIP, deepest + 2, 8} : parse_region(tau_region);
            const std::string region = describe(c.d, shape);
            const tdz_sampling s = c.sampling();
            const bool fiber = tau_target == "fiber";
            std::string out = "quantity,n,p,mean,ci_low,ci_high,trials,region,seed\n";
            for (double p : tau_ps)
                for (int n : ns) {
                    tdz_estimate e;
                    check(fiber ? tdz_estimate_tau_fiber(c.d, n, p, shape, &s, &e)
                                : tdz_estimate_tau(c.d, n, p, shape, &s, &e));
                    out += csv_row({fiber ? "tau_fiber" : "tau", std::to_string(n), num(p), num(e.mean),
                                    num(e.ci_low), num(e.ci_high), std::to_string(e.trials), region,
                                    std::to_string(c.seed)});
                }
            emit(out, c, app, *tau, args, elapsed(), json::object());
            return 0;
        }

        if (alpha->parsed()) {
            auto& c = al_c;
            if (al_ps.empty()) config_error("--p needs at least one value");
            const auto schedule = parse_schedule(al_schedule);
            tdz_alpha_config cfg;
            tdz_alpha_config_default(&cfg);
            cfg.n_max = al_nmax;
            cfg.fit_from = al_fit_from;
            cfg.point_target = al_target == "point";
            cfg.schedule = schedule.data();
            cfg.schedule_len = schedule.size();
            cfg.eps_stab = al_eps;
            cfg.sampling = c.sampling();
            std::vector<tdz_rate*> raw(al_ps.size(), nullptr);
            check(tdz_estimate_alpha_grid(c.d, al_ps.data(), al_ps.size(), &cfg, raw.data()));
            std::vector<Rate> rates;
            for (auto* r : raw) rates.emplace_back(r);
            for (const auto& r : rates) print_warnings(r.h);
            if (al_schonmann) {
                const double bound = 1.0 / std::sqrt(static_cast<double>(c.d - 1));
                json rows = json::array();
                for (const auto& r : rates) {
                    tdz_rate_summary s;
                    check(tdz_rate_summary_get(r.h, &s));
                    rows.push_back({{"p", s.p},
                                    {"alpha", s.slope_fit},
                                    {"ci", {s.slope_low, s.slope_high}},
                                    {"bound", bound},
                                    {"below", s.slope_high < bound},
                                    {"crosses", s.slope_low <= bound && bound <= s.slope_high},
                                    {"region", tdz_rate_region(r.h)}});
                }
                const json j = {{"d", c.d}, {"seed", c.seed}, {"rows", rows}};
                emit(j.dump(2) + "\n", c, app, *alpha, args, elapsed(), json::object());
            } else {
                emit(rate_rows(rates, c.seed, al_series), c, app, *alpha, args, elapsed(), json::object());
            }
            return 0;
        }

        if (beta->parsed()) {
            auto& c = be_c;
            const auto schedule = parse_schedule(be_schedule);
            tdz_beta_config cfg;
            tdz_beta_config_default(&cfg);
            cfg.m_max = be_mmax;
            cfg.fit_from = be_fit_from;
            cfg.schedule = schedule.data();
            cfg.schedule_len = schedule.size();
            cfg.eps_stab = be_eps;
            cfg.sampling = c.sampling();
            std::vector<Rate> rates;
            for (double p : be_ps) {
                tdz_rate* r = nullptr;
                check(tdz_estimate_beta(c.d, p, &cfg, &r));
                rates.emplace_back(r);
                print_warnings(r);
            }
            emit(rate_rows(rates, c.seed, be_series), c, app, *beta, args, elapsed(), json::object());
            return 0;
        }

        if (eta->parsed()) {
            auto& c = et_c;
            const tdz_sampling s = c.sampling();
            double beta_upper = et_beta_upper;
            if (beta_upper < 0.0) {
                tdz_beta_config bc;
                tdz_beta_config_default(&bc);
                bc.sampling = s;
                tdz_rate* r = nullptr;
                check(tdz_estimate_beta(c.d, et_p, &bc, &r));
                Rate guard(r);
                tdz_rate_summary sum;
                check(tdz_rate_summary_get(r, &sum));
                beta_upper = std::max(sum.slope_high, sum.band_high);
            }
            int k_cut = et_k_cut;
            if (k_cut < 0) check(tdz_choose_k_cut(beta_upper, et_eps_tail, &k_cut));
            const tdz_region_shape shape = et_region.empty()
                                               ? tdz_region_shape{TDZ_REGION_STRIP, et_nmax + 2, k_cut + 2}
                                               : parse_region(et_region);
            const std::string region = describe(c.d, shape);
            tdz_eta_result er;
            std::vector<tdz_in_result> series(static_cast<std::size_t>(std::max(et_nmax, 0)) + 1);
            check(tdz_estimate_eta(c.d, et_p, et_nmax, et_fit_from, k_cut, shape, beta_upper, &s, &er, series.data()));
            std::string out = "quantity,n,p,k_cut,mean,ci_low,ci_high,tail_bound,trials,region,seed\n";
            for (const auto& r : series)
                out += csv_row({"I_n", std::to_string(r.n), num(et_p), std::to_string(r.k_cut), num(r.value.mean),
                                num(r.value.ci_low), num(r.value.ci_high), num(r.tail_bound),
                                std::to_string(r.value.trials), region, std::to_string(c.seed)});
            out += csv_row({"eta", std::to_string(er.fit_to), num(et_p), std::to_string(k_cut), num(er.slope_fit),
                            num(er.slope_low), num(er.slope_high), num(series.front().tail_bound),
                            std::to_string(series.front().value.trials), region, std::to_string(c.seed)});
            emit(out, c, app, *eta, args, elapsed(), json{{"beta_upper", beta_upper}});
            return 0;
        }

        if (jm->parsed()) {
            auto& c = jm_c;
            tdz_j_config cfg;
            tdz_j_config_default(&cfg);
            cfg.z = jm_z;
            cfg.n_cut = jm_ncut;
            cfg.m_max = jm_mmax;
            cfg.region = jm_region.empty() ? tdz_region_shape{TDZ_REGION_STRIP, jm_ncut + 2, jm_mmax + 4}
                                           : parse_region(jm_region);
            cfg.require_window = jm_no_window ? 0 : 1;
            cfg.level_weighted = jm_estimator == "level";
            cfg.ray = jm_ray;
            cfg.sampling = c.sampling();
            double alpha_upper = jm_alpha_upper;
            if (alpha_upper < 0.0 && !jm_no_window) {
                tdz_alpha_config ac;
                tdz_alpha_config_default(&ac);
                ac.sampling = cfg.sampling;
                tdz_rate* r = nullptr;
                check(tdz_estimate_alpha(c.d, jm_p, &ac, &r));
                Rate guard(r);
                tdz_rate_summary sum;
                check(tdz_rate_summary_get(r, &sum));
                alpha_upper = std::max(sum.slope_high, sum.band_high);
            }
            cfg.alpha_upper = std::max(alpha_upper, 0.0);
            const std::string region = describe(c.d, cfg.region);
            std::vector<tdz_j_result> rows(static_cast<std::size_t>(std::max(jm_mmax, 0)) + 1);
            double phi = 0.0;
            check(tdz_estimate_j_series(c.d, jm_p, &cfg, rows.data(), &phi));
            std::string out = "quantity,m,p,z,n_cut,mean,ci_low,ci_high,tail_bound,window_ok,trials,region,seed\n";
            for (const auto& r : rows)
                out += csv_row({"J_m", std::to_string(r.m), num(jm_p), num(r.z), std::to_string(r.n_cut),
                                num(r.value.mean), num(r.value.ci_low), num(r.value.ci_high), num(r.tail_bound),
                                r.window_ok ? "true" : "false", std::to_string(r.value.trials), region,
                                std::to_string(c.seed)});
            out += csv_row({"phi", std::to_string(jm_mmax), num(jm_p), num(jm_z), std::to_string(jm_ncut), num(phi),
                            "nan", "nan", "nan", rows.front().window_ok ? "true" : "false",
                            std::to_string(rows.front().value.trials), region, std::to_string(c.seed)});
            emit(out, c, app, *jm, args, elapsed(), json{{"alpha_upper", cfg.alpha_upper}});
            return 0;
        }

        if (an->parsed()) {
            auto& c = an_c;
            const int b = c.d - 1;
            std::string out = "n,z,direct,closed,reflected\n";
            for (double z : an_zs) {
                if (!(z > 0.0)) config_error("z must be positive");
                for (int n = 0; n <= an_nmax; ++n) {
                    double direct = 0.0, closed = 0.0;
                    int reflected = 0;
                    check(tdz_an_direct(n, z, b, &direct));
                    check(tdz_an_closed(n, z, b, &closed));
                    check(tdz_check_reflection(n, z, b, &reflected));
                    out += csv_row({std::to_string(n), num(z), num(direct), num(closed), reflected ? "true" : "false"});
                }
            }
            emit(out, c, app, *an, args, elapsed(), json::object());
            return 0;
        }

        if (pc->parsed()) {
            auto& c = pc_c;
            tdz_pc_config cfg;
            tdz_pc_config_default(&cfg);
            cfg.method = pc_method == "direct" ? TDZ_PC_DIRECT : TDZ_PC_ALPHA;
            cfg.tol = pc_tol;
            cfg.max_escalations = pc_esc;
            cfg.max_probes = pc_probes;
            cfg.scan_points = pc_scan;
            const tdz_region_shape strip{TDZ_REGION_STRIP, pc_nmax + 2, pc_half_width};
            cfg.alpha.n_max = pc_nmax;
            cfg.alpha.schedule = &strip;
            cfg.alpha.schedule_len = 1;
            cfg.alpha.sampling = c.sampling();
            cfg.r_max = pc_rmax;
            cfg.r_ref = pc_rref;
            cfg.direct_sampling = c.sampling();
            tdz_pc* h = nullptr;
            const tdz_status st = tdz_estimate_pc(c.d, &cfg, &h);
            if (st != TDZ_OK && st != TDZ_UNDECIDED) check(st);
            std::unique_ptr<tdz_pc, decltype(&tdz_pc_destroy)> guard(h, &tdz_pc_destroy);
            double lo = 0.0, hi = 0.0, wall = 0.0;
            int decided = 0;
            check(tdz_pc_interval(h, &lo, &hi, &decided, &wall));
            json probes = json::array();
            for (std::size_t i = 0; i < tdz_pc_probe_count(h); ++i) {
                tdz_probe p;
                check(tdz_pc_probe(h, i, &p));
                probes.push_back({{"p", p.p},
                                  {"value", p.value},
                                  {"ci", {p.ci_low, p.ci_high}},
                                  {"reference", p.reference},
                                  {"verdict", p.verdict},
                                  {"trials", p.trials},
                                  {"depth", p.depth},
                                  {"escalation", p.escalation}});
            }
            json notes = json::array();
            for (std::size_t i = 0; i < tdz_pc_note_count(h); ++i) notes.push_back(tdz_pc_note(h, i));
            const json j = {{"d", c.d},
                            {"method", pc_method},
                            {"status", decided ? "decided" : "undecided"},
                            {"interval", {lo, hi}},
                            {"probes", probes},
                            {"notes", notes},
                            {"seed", c.seed}};
            emit(j.dump(2) + "\n", c, app, *pc, args, elapsed(), json{{"pc_wall_time", wall}});
            if (!decided) {
                std::cerr << "undecided: " << tdz_last_error() << '\n';
                return kExitUndecided;
            }
            return 0;
        }

        if (verify->parsed()) {
            char* s = nullptr;
            check(tdz_verify_suite(ve_suite.c_str(), ve_c.seed, ve_c.workers, &s));
            const json report = json::parse(owned(s));
            emit(report.dump(2) + "\n", ve_c, app, *verify, args, elapsed(), json::object());
            return report.value("pass", false) ? 0 : kExitCheckFailed;
        }

        if (oracle->parsed()) {
            auto& c = or_c;
            std::vector<std::uint32_t> branches;
            std::stringstream ss(or_target);
            for (std::string item; std::getline(ss, item, ',');) {
                try {
                    branches.push_back(static_cast<std::uint32_t>(std::stoul(item)));
                } catch (const std::exception&) {
                    config_error("target '" + or_target + "' is not a list of branch indices");
                }
            }
            tdz_vertex v;
            check(tdz_vertex_from_branches(c.d, branches.data(), branches.size(), &v));
            char* s = nullptr;
            check(tdz_oracle_exact(c.d, parse_region(or_region), v, or_layer, or_ps.data(), or_ps.size(), &s));
            emit(json::parse(owned(s)).dump(2) + "\n", c, app, *oracle, args, elapsed(), json::object());
            return 0;
        }
    } catch (const Failure& f) {
        std::cerr << (f.code == kExitConfig     ? "config error: "
                      : f.code == kExitResource ? "resource error: "
                                                : "error: ")
                  << f.message << '\n';
        return f.code;
    }
    return kExitConfig;
}
