#pragma once

// Two estimates of p_c(T_d □ Z). The first inverts alpha at 1/(d-1); the
// second classifies p by how the probability of reaching distance R scales
// with R. Both drive the same CI-separated bisection: a probe moves an end
// of the bracket only when its interval clears the reference value.

#include <cstdint>
#include <string>
#include <vector>

#include "tdz/estimators.hpp"

namespace tdz {

enum class PcStatus { Decided, Undecided };

struct Probe {
    double p = 0.0;
    double value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double reference = 0.0;  // value the interval is compared against
    int verdict = 0;         // -1 below p_c, +1 above, 0 undecided
    std::uint64_t trials = 0;
    int depth = 0;  // n_max for alpha probes, R for direct probes
    int escalation = 0;
    std::string region;
    std::string note;
};

struct PcResult {
    std::string method;
    int d = 3;
    double lo = 0.0;
    double hi = 1.0;
    PcStatus status = PcStatus::Undecided;
    std::vector<Probe> probes;
    std::vector<std::string> notes;
    double wall_time = 0.0;
};

const char* status_name(PcStatus s);

struct PcAlphaConfig {
    double tol = 0.02;
    // Probes use alpha.schedule; empty means the single strip
    // B_T(n_max + 2) x [-16, 16].
    AlphaConfig alpha;
    // Escalation level k applies the first k steps of: double the trials,
    // raise n_max by one, double the strip half width.
    int max_escalations = 3;
    int max_probes = 60;
    // Upward scan for the initial bracket: scan_points evenly spaced values
    // in [1/(d+1), 1/(d-1)]; p = 0 is the trivial lower end.
    int scan_points = 9;
};

PcResult estimate_pc_via_alpha(const Lattice& lat, const PcAlphaConfig& cfg);

struct PcDirectConfig {
    double tol = 0.02;
    int r_max = 0;  // 0 means min(40, largest encodable depth)
    int r_ref = 0;  // 0 means r_max / 2
    SamplingConfig sampling;
    int max_escalations = 3;  // each level doubles the field count
    int max_probes = 60;
    int scan_points = 9;  // as in PcAlphaConfig
};

// theta_R(p) is the fraction of fields whose invasion from o reaches graph
// distance R inside ProductBall(r_max) below p. At p_c the one-arm
// probability of a mean-field model scales like 1/R, so p is classified by
// whether theta_{r_max} / theta_{r_ref} lies below or above r_ref / r_max.
// The ratio is a conditional frequency over the fields that reach r_ref,
// with a Wilson interval.
PcResult estimate_pc_direct(const Lattice& lat, const PcDirectConfig& cfg);

}  // namespace tdz
