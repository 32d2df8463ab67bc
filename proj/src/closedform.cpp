#include "mmq/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mmq/errors.hpp"

namespace mmq {

namespace {

// Stable hyperbolic kernels for x >= 0.
double sech_pos(double x) {
    const double e = std::exp(-x);
    return 2.0 * e / (1.0 + e * e);
}

double logcosh_pos(double x) {
    return x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
}

// tanh(x) - 1 without cancellation.
double tanh_m1(double x) {
    const double e = std::exp(-2.0 * x);
    return -2.0 * e / (1.0 + e);
}

// lambda * sinh(lambda u) / cosh(lambda tau) for 0 <= u <= tau; every
// exponent is non-positive so arbitrarily large lambda*tau is safe.
double sinh_kernel(double lam, double u, double tau) {
    if (lam <= 0.0) return 0.0;
    const double num = std::exp(lam * (u - tau)) - std::exp(-lam * (u + tau));
    return lam * num / (1.0 + std::exp(-2.0 * lam * tau));
}

int odd_nodes(int n) { return n < 3 ? 3 : (n % 2 == 0 ? n + 1 : n); }

} // namespace

CoreMatrices build_core(const CheckedSpec& spec, const MomentTable& mom) {
    const int d = spec.d();
    CoreMatrices core;
    core.d_plus = mom.d_plus();
    core.d_minus = mom.d_minus();
    core.v_minus = mom.v_minus();
    core.vtilde_minus = mom.vtilde_minus();

    core.d_plus_sqrt.resize(d);
    core.d_plus_inv_sqrt.resize(d);
    for (int i = 0; i < d; ++i) {
        if (!(core.d_plus[i] > 0.0))
            throw NumericalError("quadratic coefficient positivity violated for asset " +
                                 std::to_string(i) + " (alpha2^b + alpha2^a must be > 0)");
        core.d_plus_sqrt[i] = std::sqrt(core.d_plus[i]);
        core.d_plus_inv_sqrt[i] = 1.0 / core.d_plus_sqrt[i];
    }

    // S = D+^{1/2} Sigma D+^{1/2}; its spectrum drives everything else.
    Mat s(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            s(i, j) = core.d_plus_sqrt[i] * spec.covariance()(i, j) * core.d_plus_sqrt[j];
    SymSpectrum spectrum = sym_eig(s);
    const double tol = 1e-10 * std::max(norm_fro(s), 1e-300);
    Vec root(d);
    for (int k = 0; k < d; ++k) {
        double ev = spectrum.eigenvalues[k];
        if (ev < -tol) throw NumericalError("build_core: D+^{1/2} Sigma D+^{1/2} is not PSD");
        root[k] = ev > 0.0 ? std::sqrt(ev) : 0.0;
    }

    const double sg = std::sqrt(spec.gamma());
    core.a_hat.eigenvectors = spectrum.eigenvectors;
    core.a_hat.eigenvalues.resize(d);
    for (int k = 0; k < d; ++k) core.a_hat.eigenvalues[k] = sg * root[k];
    core.a_hat_mat = core.a_hat.reconstruct();

    core.gamma_mat = Mat(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k)
                acc += spectrum.eigenvectors(i, k) * root[k] * spectrum.eigenvectors(j, k);
            core.gamma_mat(i, j) = core.d_plus_inv_sqrt[i] * acc * core.d_plus_inv_sqrt[j];
        }
    core.gamma_diag = core.gamma_mat.diagonal();
    return core;
}

RiccatiSolution::RiccatiSolution(const CheckedSpec& spec, const MomentTable& mom,
                                 CoreMatrices core, int quad_nodes)
    : d_(spec.d()),
      T_(spec.horizon()),
      gamma_(spec.gamma()),
      mu_(spec.drift()),
      core_(std::move(core)),
      nodes_(odd_nodes(quad_nodes)) {
    lam_ = core_.a_hat.eigenvalues;
    const Mat& p = core_.a_hat.eigenvectors;

    w_ = Mat(d_, d_);
    for (int i = 0; i < d_; ++i)
        for (int k = 0; k < d_; ++k) w_(i, k) = core_.d_plus_inv_sqrt[i] * p(i, k);

    ut_mu_.assign(d_, 0.0);
    for (int k = 0; k < d_; ++k) {
        double acc = 0.0;
        for (int i = 0; i < d_; ++i) acc += p(i, k) * core_.d_plus_sqrt[i] * mu_[i];
        ut_mu_[k] = acc;
    }

    const double sg = std::sqrt(gamma_);
    Vec vplus(d_);
    for (int i = 0; i < d_; ++i)
        vplus[i] = core_.v_minus[i] + core_.vtilde_minus[i] +
                   0.5 * sg * core_.d_minus[i] * core_.gamma_diag[i];
    g_const_.assign(d_, 0.0);
    for (int k = 0; k < d_; ++k) {
        double acc = 0.0;
        for (int i = 0; i < d_; ++i) acc += w_(i, k) * vplus[i];
        g_const_[k] = acc;
    }

    double dm = 0.0, lm = 0.0;
    for (int i = 0; i < d_; ++i) dm = std::max(dm, std::fabs(core_.d_minus[i]));
    for (int k = 0; k < d_; ++k) lm = std::max(lm, lam_[k]);
    need_b_quadrature_ = dm > 0.0 && lm > 0.0;

    c_const_ = mom.tr_d01() + mom.chi_tilde10() + 0.5 * mom.chi_hat20();
    const Vec d12 = mom.d12_diag();
    const Vec v21 = mom.vtilde21_sum();
    c_lin_diag_.resize(d_);
    for (int i = 0; i < d_; ++i) c_lin_diag_[i] = d12[i] + v21[i];
    d23_ = mom.d23_diag();
    v_plus_tilde_.resize(d_);
    for (int i = 0; i < d_; ++i) v_plus_tilde_[i] = core_.v_minus[i] + core_.vtilde_minus[i];
    d_minus_ = core_.d_minus;
}

void RiccatiSolution::require_time(double t) const {
    const double slack = 1e-9 * std::max(1.0, T_);
    if (t < -slack || t > T_ + slack)
        throw ValidationError("time " + std::to_string(t) + " outside [0, " + std::to_string(T_) +
                              "]");
}

Vec RiccatiSolution::a_spectral(double tau) const {
    Vec m(d_);
    for (int k = 0; k < d_; ++k) m[k] = lam_[k] > 0.0 ? lam_[k] * std::tanh(lam_[k] * tau) : 0.0;
    return m;
}

Mat RiccatiSolution::eval_A(double t) const {
    require_time(t);
    const double tau = std::clamp(T_ - t, 0.0, T_);
    const Vec m = a_spectral(tau);
    Mat a(d_, d_);
    for (int i = 0; i < d_; ++i)
        for (int j = i; j < d_; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d_; ++k) acc += w_(i, k) * m[k] * w_(j, k);
            a(i, j) = 0.5 * acc;
            a(j, i) = a(i, j);
        }
    return a;
}

Vec RiccatiSolution::eval_A_diag(double t) const {
    require_time(t);
    const double tau = std::clamp(T_ - t, 0.0, T_);
    const Vec m = a_spectral(tau);
    Vec diag(d_, 0.0);
    for (int i = 0; i < d_; ++i) {
        double acc = 0.0;
        for (int k = 0; k < d_; ++k) acc += w_(i, k) * m[k] * w_(i, k);
        diag[i] = 0.5 * acc;
    }
    return diag;
}

Vec RiccatiSolution::b_spectral(double tau) const {
    Vec h(d_, 0.0);
    for (int k = 0; k < d_; ++k) {
        const double lt = lam_[k] * tau;
        const double tanhc = lam_[k] > 0.0 ? std::tanh(lt) / lam_[k] : tau;
        h[k] = tanhc * ut_mu_[k] + (lam_[k] > 0.0 ? 1.0 - sech_pos(lt) : 0.0) * g_const_[k];
    }
    if (!need_b_quadrature_ || tau <= 0.0) return h;

    // Simpson over the remainder g_r(u) = W^T D- (D(A(u)) - D(A_inf)), which
    // decays like exp(-2 lambda_min u); the ergodic component is already in
    // g_const_ above.
    const int n = nodes_;
    const double hu = tau / (n - 1);
    Vec acc(d_, 0.0);
    Vec gr(d_), ddiff(d_);
    for (int j = 0; j < n; ++j) {
        const double u = j * hu;
        for (int i = 0; i < d_; ++i) {
            double s = 0.0;
            for (int k = 0; k < d_; ++k)
                if (lam_[k] > 0.0) s += w_(i, k) * w_(i, k) * lam_[k] * tanh_m1(lam_[k] * u);
            ddiff[i] = 0.5 * s * core_.d_minus[i];
        }
        for (int k = 0; k < d_; ++k) {
            double s = 0.0;
            for (int i = 0; i < d_; ++i) s += w_(i, k) * ddiff[i];
            gr[k] = s;
        }
        const double wgt = (j == 0 || j == n - 1) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        for (int k = 0; k < d_; ++k) acc[k] += wgt * sinh_kernel(lam_[k], u, tau) * gr[k];
    }
    for (int k = 0; k < d_; ++k) h[k] += acc[k] * hu / 3.0;
    return h;
}

Vec RiccatiSolution::eval_B(double t) const {
    require_time(t);
    const double tau = std::clamp(T_ - t, 0.0, T_);
    const Vec h = b_spectral(tau);
    Vec b(d_, 0.0);
    for (int i = 0; i < d_; ++i) {
        double acc = 0.0;
        for (int k = 0; k < d_; ++k) acc += w_(i, k) * h[k];
        b[i] = -acc;
    }
    return b;
}

double RiccatiSolution::c_of_tau(double tau) const {
    if (tau <= 0.0) return 0.0;

    double analytic = c_const_ * tau;
    for (int i = 0; i < d_; ++i) {
        double s = 0.0;
        for (int k = 0; k < d_; ++k)
            if (lam_[k] > 0.0) s += w_(i, k) * w_(i, k) * logcosh_pos(lam_[k] * tau);
        analytic += c_lin_diag_[i] * 0.5 * s;
    }

    const bool b_zero = [&] {
        if (need_b_quadrature_) return false;
        for (int k = 0; k < d_; ++k)
            if (ut_mu_[k] != 0.0 || g_const_[k] != 0.0) return false;
        return true;
    }();

    // Quadratic terms of the C integrand, Simpson in u = T - s.
    const int n = nodes_;
    const double hu = tau / (n - 1);
    double quad = 0.0;
    Vec adiag(d_), b(d_, 0.0);
    for (int j = 0; j < n; ++j) {
        const double u = j * hu;
        const Vec m = a_spectral(u);
        for (int i = 0; i < d_; ++i) {
            double s = 0.0;
            for (int k = 0; k < d_; ++k) s += w_(i, k) * m[k] * w_(i, k);
            adiag[i] = 0.5 * s;
        }
        if (!b_zero) {
            const Vec h = b_spectral(u);
            for (int i = 0; i < d_; ++i) {
                double s = 0.0;
                for (int k = 0; k < d_; ++k) s += w_(i, k) * h[k];
                b[i] = -s;
            }
        }
        double f = 0.0;
        for (int i = 0; i < d_; ++i) {
            f += 0.5 * d23_[i] * adiag[i] * adiag[i];
            if (!b_zero)
                f += v_plus_tilde_[i] * b[i] + b[i] * d_minus_[i] * adiag[i] +
                     0.5 * core_.d_plus[i] * b[i] * b[i];
        }
        const double wgt = (j == 0 || j == n - 1) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        quad += wgt * f;
    }
    quad *= hu / 3.0;

    return -(analytic + quad);
}

double RiccatiSolution::eval_C(double t) const {
    require_time(t);
    return c_of_tau(std::clamp(T_ - t, 0.0, T_));
}

double RiccatiSolution::theta_check(double t, const Vec& q) const {
    const Mat a = eval_A(t);
    const Vec b = eval_B(t);
    const double c = eval_C(t);
    double qaq = 0.0;
    for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) qaq += q[i] * a(i, j) * q[j];
    return -qaq - dot(q, b) - c;
}

RiccatiSolution solve_closed_form(const CheckedSpec& spec, int quad_nodes) {
    const CoeffSet coeffs = taylor_coeff_set(spec);
    const MomentTable mom = moments(spec, coeffs);
    CoreMatrices core = build_core(spec, mom);
    return RiccatiSolution(spec, mom, std::move(core), quad_nodes);
}

AsymptoticLimits asymptotics(const RiccatiSolution& sol) {
    const CoreMatrices& core = sol.core();
    const int d = sol.d();
    const Vec& lam = core.a_hat.eigenvalues;
    double lam_max = 0.0;
    for (double l : lam) lam_max = std::max(lam_max, l);
    const double rank_tol = 1e-12 * lam_max;

    AsymptoticLimits out;
    out.A_inf = core.gamma_mat * (0.5 * std::sqrt(sol.gamma()));

    // Image condition: components of P^T D+^{1/2} mu along zero eigenvalues.
    const Mat& p = core.a_hat.eigenvectors;
    Vec utmu(d, 0.0);
    for (int k = 0; k < d; ++k) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i) acc += p(i, k) * core.d_plus_sqrt[i] * sol.drift()[i];
        utmu[k] = acc;
    }
    double null_part = 0.0;
    for (int k = 0; k < d; ++k)
        if (lam[k] <= rank_tol) null_part += utmu[k] * utmu[k];
    out.image_condition_ok = std::sqrt(null_part) <= 1e-10 * norm2(utmu);
    if (!out.image_condition_ok) return out;

    const double sg = std::sqrt(sol.gamma());
    Vec vplus(d);
    for (int i = 0; i < d; ++i)
        vplus[i] = core.v_minus[i] + core.vtilde_minus[i] +
                   0.5 * sg * core.d_minus[i] * core.gamma_diag[i];
    Vec h(d, 0.0);
    for (int k = 0; k < d; ++k) {
        if (lam[k] <= rank_tol) continue;
        double proj = 0.0;
        for (int i = 0; i < d; ++i) proj += p(i, k) * core.d_plus_inv_sqrt[i] * vplus[i];
        h[k] = utmu[k] / lam[k] + proj;
    }
    Vec b_inf(d, 0.0);
    for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k) acc += core.d_plus_inv_sqrt[i] * p(i, k) * h[k];
        b_inf[i] = -acc;
    }
    out.B_inf = b_inf;

    // C(0)/T limit: minus the C' right-hand side at the stationary (A, B).
    // Equivalent to the displayed limit; substituting A_inf, B_inf avoids
    // transcribing its many terms.
    const Vec adiag = out.A_inf.diagonal();
    double crhs = sol.c_const_;
    for (int i = 0; i < d; ++i) {
        crhs += sol.c_lin_diag_[i] * adiag[i];
        crhs += 0.5 * sol.d23_[i] * adiag[i] * adiag[i];
        crhs += sol.v_plus_tilde_[i] * b_inf[i];
        crhs += b_inf[i] * sol.d_minus_[i] * adiag[i];
        crhs += 0.5 * core.d_plus[i] * b_inf[i] * b_inf[i];
    }
    out.C_rate = -crhs;
    return out;
}

void export_closed_form_csv(const RiccatiSolution& sol, std::ostream& out, int samples) {
    const int d = sol.d();
    out << "t";
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out << ",A_" << i << "_" << j;
    for (int i = 0; i < d; ++i) out << ",B_" << i;
    out << ",C\n";
    const int n = samples < 2 ? 2 : samples;
    out.precision(17);
    for (int s = 0; s < n; ++s) {
        const double t = sol.horizon() * s / (n - 1);
        const Mat a = sol.eval_A(t);
        const Vec b = sol.eval_B(t);
        out << t;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out << "," << a(i, j);
        for (int i = 0; i < d; ++i) out << "," << b[i];
        out << "," << sol.eval_C(t) << "\n";
    }
}

} // namespace mmq
