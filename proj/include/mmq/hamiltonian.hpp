#pragma once

#include <optional>

#include "mmq/model.hpp"

namespace mmq {

/// One Hamiltonian evaluation: H(p) = sup over admissible offsets of the
/// instantaneous reward, the maximizing offset, and dH/dp.
struct HamEval {
    double value = 0.0;
    double argmax = 0.0;
    double derivative = 0.0;
};

/// Closed form for exponential intensities Lambda(delta) = A exp(-k delta):
///   H(p) = (A/k) C_xi exp(-k p),
///   C_xi = (1 + xi z / k)^{-(1 + k/(xi z))}  (xi > 0),  e^{-1}  (xi = 0),
///   argmax = p + (1/(xi z)) log(1 + xi z / k)  (xi > 0),  p + 1/k  (xi = 0),
///   H'(p) = -k H(p).
HamEval ham_exponential(double scale, double decay, double xi, double z, double p);

/// C_xi constant above.
double ham_exp_cxi(double decay, double xi, double z);

/// sup over delta >= -floor (or all of R when no floor) of the xi-objective,
/// for any admissible curve. Exponential curves take the closed form with the
/// floor clamp applied; everything else runs a bracketed golden-section
/// search. Derivative by the envelope theorem.
HamEval ham_eval(const IntensityCurve& curve, double xi, double z, double p,
                 std::optional<double> floor = std::nullopt);

/// Same objective, forced through the numerical search path regardless of
/// curve kind (exponential curves serve as oracles for it).
HamEval ham_generic(const IntensityCurve& curve, double xi, double z, double p,
                    std::optional<double> floor = std::nullopt);

/// Quadratic (Taylor) model of H around p = 0: a0 + a1 p + (1/2) a2 p^2.
struct QuadraticCoeffs {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0;

    double value(double p) const { return a0 + p * (a1 + 0.5 * a2 * p); }
    double derivative(double p) const { return a1 + a2 * p; }
};

/// alpha_j = H^(j)(0). Exact derivatives for exponential curves; 5-point
/// central differences of ham_generic otherwise.
QuadraticCoeffs taylor_coeffs(const IntensityCurve& curve, double xi, double z,
                              std::optional<double> floor = std::nullopt);

/// Per-size coefficients, parallel to the spec's tier structure:
/// coeffs[asset][tier].bid[atom], .ask[atom].
struct TierCoeffs {
    std::vector<QuadraticCoeffs> bid, ask;
};
using CoeffSet = std::vector<std::vector<TierCoeffs>>;

/// Taylor coefficients for every (asset, tier, side, size atom) of the spec,
/// with xi taken from the spec objective. Callers may substitute their own
/// CoeffSet anywhere one is accepted.
CoeffSet taylor_coeff_set(const CheckedSpec& spec);

/// Size-distribution moments of the quadratic coefficients. Stored per asset
/// and side, summed over tiers:
///   plain[j][k]  = sum_n sum_z w z^k alpha_j(z)          (Delta_{j,k})
///   cost[j][k]   = sum_n c_n  sum_z w z^k alpha_j(z)     (tilde-V components)
///   cost2[j][k]  = sum_n c_n^2 sum_z w z^k alpha_j(z)    (hat-chi components)
struct SideMoments {
    double plain[3][4] = {};
    double cost[3][4] = {};
    double cost2[3][4] = {};
};

struct MomentTable {
    std::vector<SideMoments> bid, ask;

    int d() const { return static_cast<int>(bid.size()); }

    // Aggregates of the Riccati system.
    Vec d_plus() const;          // Delta^b_{2,1} + Delta^a_{2,1} per asset
    Vec d_minus() const;         // Delta^b_{2,2} - Delta^a_{2,2}
    Vec v_minus() const;         // Delta^b_{1,1} - Delta^a_{1,1}
    Vec vtilde_minus() const;    // cost-weighted Delta^b_{2,0} - Delta^a_{2,0}
    Vec d12_diag() const;        // Delta^b_{1,2} + Delta^a_{1,2}
    Vec d23_diag() const;        // Delta^b_{2,3} + Delta^a_{2,3}
    Vec vtilde21_sum() const;    // cost-weighted Delta^b_{2,1} + Delta^a_{2,1}
    double tr_d01() const;       // sum_i Delta^b_{0,1} + Delta^a_{0,1}
    double chi_tilde10() const;  // cost-weighted Delta_{1,0}, both sides
    double chi_hat20() const;    // cost^2-weighted Delta_{2,0}, both sides
};

MomentTable moments(const CheckedSpec& spec, const CoeffSet& coeffs);

} // namespace mmq
