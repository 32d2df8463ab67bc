#pragma once

#include <iosfwd>
#include <optional>

#include "mmq/hamiltonian.hpp"
#include "mmq/linalg.hpp"
#include "mmq/model.hpp"

namespace mmq {

/// Matrices entering the closed-form Riccati solution:
///   D+ = D^b_{2,1} + D^a_{2,1}  (positive diagonal),
///   A_hat = sqrt(gamma) (D+^{1/2} Sigma D+^{1/2})^{1/2},
///   Gamma = D+^{-1/2} (D+^{1/2} Sigma D+^{1/2})^{1/2} D+^{-1/2}.
struct CoreMatrices {
    Vec d_plus;
    Vec d_minus;
    Vec v_minus;
    Vec vtilde_minus;
    Vec d_plus_sqrt, d_plus_inv_sqrt;
    SymSpectrum a_hat;   // spectrum, eigenvalues ascending
    Mat a_hat_mat;
    Mat gamma_mat;
    Vec gamma_diag;
};

/// Assembles the core matrices. Throws NumericalError when some
/// alpha_2^b + alpha_2^a <= 0 (the positivity hypothesis of the closed form).
CoreMatrices build_core(const CheckedSpec& spec, const MomentTable& mom);

struct AsymptoticLimits;

/// Closed-form solution (A, B, C) of the quadratic-Hamiltonian system with
/// terminal condition A(T) = B(T) = C(T) = 0, evaluated through the spectral
/// decomposition of A_hat. All hyperbolic arguments are kept non-negative by
/// working in remaining time tau = T - t, with tanh/sech/log-cosh forms so
/// large lambda*tau cannot overflow.
///
/// B and C mix analytic antiderivatives with composite Simpson quadrature:
/// the drift and constant parts of the B integrand integrate exactly (cosh
/// antiderivative), including the ergodic component of D- D(A(s)); only the
/// exponentially decaying remainder is integrated numerically, which keeps
/// B accurate uniformly in T.
class RiccatiSolution {
public:
    RiccatiSolution(const CheckedSpec& spec, const MomentTable& mom, CoreMatrices core,
                    int quad_nodes = 201);

    double horizon() const { return T_; }
    int d() const { return d_; }
    int quad_nodes() const { return nodes_; }
    const CoreMatrices& core() const { return core_; }
    const Vec& drift() const { return mu_; }
    double gamma() const { return gamma_; }

    /// A(t), symmetric PSD; zero at t = T.
    Mat eval_A(double t) const;
    /// B(t); zero at t = T.
    Vec eval_B(double t) const;
    /// C(t); zero at t = T.
    double eval_C(double t) const;

    /// Quadratic proxy theta-check(t, q) = -q'A(t)q - q'B(t) - C(t).
    double theta_check(double t, const Vec& q) const;

    /// diag of A(t) without forming the full matrix.
    Vec eval_A_diag(double t) const;

private:
    void require_time(double t) const;
    Vec a_spectral(double tau) const;          // lambda_i tanh(lambda_i tau)
    Vec b_spectral(double tau) const;          // coefficients of B in the W basis
    double c_of_tau(double tau) const;

    friend AsymptoticLimits asymptotics(const RiccatiSolution& sol);

    int d_ = 0;
    double T_ = 0.0;
    double gamma_ = 0.0;
    Vec mu_;
    CoreMatrices core_;
    int nodes_ = 201;

    // Precomputed spectral plumbing.
    Mat w_;          // D+^{-1/2} P
    Vec lam_;        // eigenvalues of A_hat (ascending, >= 0)
    Vec ut_mu_;      // P^T D+^{1/2} mu
    Vec g_const_;    // W^T (V- + Vtilde- + 1/2 sqrt(gamma) D- D(Gamma))
    bool need_b_quadrature_ = false;

    // Aggregates for C.
    double c_const_ = 0.0;   // Tr(D_{0,1}) + chi~_{1,0} + 1/2 chi^_{2,0}
    Vec c_lin_diag_;         // d12 + vtilde21, applied to D(A)
    Vec d23_;
    Vec v_plus_tilde_;       // V- + Vtilde-
    Vec d_minus_;            // alias of core
};

/// Full pipeline: Taylor coefficients -> moments -> core -> solution.
RiccatiSolution solve_closed_form(const CheckedSpec& spec, int quad_nodes = 201);

/// T -> infinity limits. B_inf and C_rate are withheld when the image
/// condition D+^{1/2} mu in Im(A_hat) fails (no constant asymptotic quotes).
struct AsymptoticLimits {
    Mat A_inf;
    std::optional<Vec> B_inf;
    std::optional<double> C_rate;
    bool image_condition_ok = false;
};

AsymptoticLimits asymptotics(const RiccatiSolution& sol);

/// CSV sample dump: t, row-major A entries, B entries, C.
void export_closed_form_csv(const RiccatiSolution& sol, std::ostream& out, int samples);

} // namespace mmq
