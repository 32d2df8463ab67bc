#pragma once

#include <cstdint>

#include "mmq/closedform.hpp"
#include "mmq/hamiltonian.hpp"
#include "mmq/model.hpp"

namespace mmq {

struct McOptions {
    double step_hint = -1.0;       // majorant / integrand grid step; <= 0 selects horizon/1000
    double majorant_safety = 1.5;  // validated by the violation counter
    bool gate_at_limits = true;    // gate proxy jumps at +/-Q (comparable to the exact grid)
    int threads = 0;               // 0: MM_THREADS or hardware
};

/// Monte-Carlo estimate of the first-order correction eta(t, q).
struct CorrectionEstimate {
    double mean = 0.0;
    double std_error = 0.0;       // sample sd / sqrt(n)
    long long n_paths = 0;
    std::uint64_t seed = 0;
    long long clamp_events = 0;          // negative proxy intensities clamped to 0
    long long majorant_violations = 0;   // must stay 0 for a valid thinning run
    double mean_jumps = 0.0;             // realized jumps per path
    double mean_intensity_integral = 0.0;  // expected jumps per path (self-consistency)
};

/// Simulates the inventory point process under the quadratic-proxy
/// intensities -H_check'(p) (clamped at zero) starting from (t, q) and
/// accumulates the Feynman-Kac integrand sum_i z (H - H_check)(p-arguments)
/// along each path. Deterministic for fixed (seed, n_paths) and any thread
/// count: every path owns a counter-keyed stream and reduction is by index.
CorrectionEstimate estimate_eta(const CheckedSpec& spec, const CoeffSet& coeffs,
                                const RiccatiSolution& sol, double t, const Vec& q,
                                long long n_paths, std::uint64_t seed, const McOptions& opts = {});

/// theta-check(t, q) + eta-hat. The perturbation parameter is absorbed into
/// h = H - H_check, so the correction enters with unit weight.
double corrected_theta(const RiccatiSolution& sol, const CorrectionEstimate& est, double t,
                       const Vec& q);

} // namespace mmq
