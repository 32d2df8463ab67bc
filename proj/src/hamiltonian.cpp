#include "mmq/hamiltonian.hpp"

#include <cmath>

#include "mmq/errors.hpp"

namespace mmq {

namespace {

// xi-objective at a fixed offset.
double objective(const IntensityCurve& curve, double xi, double z, double p, double delta) {
    const double lam = curve(delta);
    if (xi > 0.0) return lam / (xi * z) * (1.0 - std::exp(-xi * z * (delta - p)));
    return lam * (delta - p);
}

} // namespace

double ham_exp_cxi(double decay, double xi, double z) {
    if (xi <= 0.0) return std::exp(-1.0);
    const double r = xi * z / decay;
    return std::pow(1.0 + r, -(1.0 + 1.0 / r));
}

HamEval ham_exponential(double scale, double decay, double xi, double z, double p) {
    HamEval h;
    const double cxi = ham_exp_cxi(decay, xi, z);
    h.value = scale / decay * cxi * std::exp(-decay * p);
    h.derivative = -decay * h.value;
    const double shift =
        xi > 0.0 ? std::log1p(xi * z / decay) / (xi * z) : 1.0 / decay;
    h.argmax = p + shift;
    return h;
}

HamEval ham_eval(const IntensityCurve& curve, double xi, double z, double p,
                 std::optional<double> floor) {
    if (curve.is_exponential()) {
        HamEval h = ham_exponential(curve.scale(), curve.decay(), xi, z, p);
        if (!floor || h.argmax >= -*floor) return h;
        // Floor binds: the objective is decreasing on [-floor, inf).
        h.argmax = -*floor;
        h.value = objective(curve, xi, z, p, h.argmax);
        const double lam = curve(h.argmax);
        h.derivative = xi > 0.0 ? -lam * std::exp(-xi * z * (h.argmax - p)) : -lam;
        return h;
    }
    return ham_generic(curve, xi, z, p, floor);
}

HamEval ham_generic(const IntensityCurve& curve, double xi, double z, double p,
                    std::optional<double> floor) {
    // The objective is <= 0 for delta <= p, positive above, and unimodal for
    // curves satisfying the log-curvature bound, so the maximizer lies in
    // [lo, lo + span] once the bracket search sees two consecutive decreases.
    const double lo = floor ? std::max(p, -*floor) : p;
    const double lam_ref = curve(lo);

    double span = 1.0;
    double prev = objective(curve, xi, z, p, lo + span);
    int decreases = 0;
    int guard = 0;
    for (;;) {
        span *= 2.0;
        const double cur = objective(curve, xi, z, p, lo + span);
        decreases = cur < prev ? decreases + 1 : 0;
        if (decreases >= 2 && curve(lo + span) < 1e-12 * lam_ref) break;
        prev = cur;
        if (++guard > 200)
            throw NumericalError("ham_generic: bracketing failed (p=" + std::to_string(p) +
                                 ", z=" + std::to_string(z) + ", xi=" + std::to_string(xi) +
                                 ", span=" + std::to_string(span) + ")");
    }

    double a = lo, b = lo + span;
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = objective(curve, xi, z, p, x1);
    double f2 = objective(curve, xi, z, p, x2);
    while (b - a > 1e-12 * (1.0 + std::fabs(a) + std::fabs(b))) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = objective(curve, xi, z, p, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = objective(curve, xi, z, p, x2);
        }
    }

    HamEval h;
    h.argmax = 0.5 * (a + b);
    // When the floor (or the lower bracket edge) carries the sup, snap to it.
    if (objective(curve, xi, z, p, lo) >= objective(curve, xi, z, p, h.argmax)) h.argmax = lo;
    h.value = objective(curve, xi, z, p, h.argmax);
    const double lam = curve(h.argmax);
    h.derivative = xi > 0.0 ? -lam * std::exp(-xi * z * (h.argmax - p)) : -lam;
    return h;
}

QuadraticCoeffs taylor_coeffs(const IntensityCurve& curve, double xi, double z,
                              std::optional<double> floor) {
    QuadraticCoeffs c;
    if (curve.is_exponential()) {
        const double k = curve.decay();
        const double h0 = ham_exponential(curve.scale(), k, xi, z, 0.0).value;
        c.a0 = h0;
        c.a1 = -k * h0;
        c.a2 = k * k * h0;
        return c;
    }
    const double h = 1e-4;
    const double f_2 = ham_generic(curve, xi, z, -2 * h, floor).value;
    const double f_1 = ham_generic(curve, xi, z, -h, floor).value;
    const double f0 = ham_generic(curve, xi, z, 0.0, floor).value;
    const double f1 = ham_generic(curve, xi, z, h, floor).value;
    const double f2 = ham_generic(curve, xi, z, 2 * h, floor).value;
    c.a0 = f0;
    c.a1 = (f_2 - 8 * f_1 + 8 * f1 - f2) / (12 * h);
    c.a2 = (-f_2 + 16 * f_1 - 30 * f0 + 16 * f1 - f2) / (12 * h * h);
    return c;
}

CoeffSet taylor_coeff_set(const CheckedSpec& spec) {
    const double xi = effective_xi(spec);
    CoeffSet out(spec.d());
    for (int i = 0; i < spec.d(); ++i) {
        for (const TierSpec& tier : spec.tiers(i)) {
            TierCoeffs tc;
            for (const auto& atom : tier.bid.sizes.atoms)
                tc.bid.push_back(taylor_coeffs(tier.bid.intensity, xi, atom.size, spec.delta_floor()));
            for (const auto& atom : tier.ask.sizes.atoms)
                tc.ask.push_back(taylor_coeffs(tier.ask.intensity, xi, atom.size, spec.delta_floor()));
            out[i].push_back(std::move(tc));
        }
    }
    return out;
}

namespace {

void accumulate(SideMoments& m, const TierSide& side, const std::vector<QuadraticCoeffs>& coeffs) {
    for (size_t a = 0; a < side.sizes.atoms.size(); ++a) {
        const double z = side.sizes.atoms[a].size;
        const double w = side.sizes.atoms[a].weight;
        const double alpha[3] = {coeffs[a].a0, coeffs[a].a1, coeffs[a].a2};
        double zk = 1.0;
        for (int k = 0; k < 4; ++k) {
            for (int j = 0; j < 3; ++j) {
                const double v = w * zk * alpha[j];
                m.plain[j][k] += v;
                m.cost[j][k] += side.fixed_cost * v;
                m.cost2[j][k] += side.fixed_cost * side.fixed_cost * v;
            }
            zk *= z;
        }
    }
}

} // namespace

MomentTable moments(const CheckedSpec& spec, const CoeffSet& coeffs) {
    if (static_cast<int>(coeffs.size()) != spec.d())
        throw ValidationError("moments: coefficient set does not match the spec");
    MomentTable t;
    t.bid.resize(spec.d());
    t.ask.resize(spec.d());
    for (int i = 0; i < spec.d(); ++i) {
        const auto& tiers = spec.tiers(i);
        if (coeffs[i].size() != tiers.size())
            throw ValidationError("moments: coefficient set does not match the tier list");
        for (size_t n = 0; n < tiers.size(); ++n) {
            if (coeffs[i][n].bid.size() != tiers[n].bid.sizes.atoms.size() ||
                coeffs[i][n].ask.size() != tiers[n].ask.sizes.atoms.size())
                throw ValidationError("moments: coefficient set does not match the size atoms");
            accumulate(t.bid[i], tiers[n].bid, coeffs[i][n].bid);
            accumulate(t.ask[i], tiers[n].ask, coeffs[i][n].ask);
        }
    }
    return t;
}

Vec MomentTable::d_plus() const {
    Vec v(bid.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = bid[i].plain[2][1] + ask[i].plain[2][1];
    return v;
}

Vec MomentTable::d_minus() const {
    Vec v(bid.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = bid[i].plain[2][2] - ask[i].plain[2][2];
    return v;
}

Vec MomentTable::v_minus() const {
    Vec v(bid.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = bid[i].plain[1][1] - ask[i].plain[1][1];
    return v;
}

Vec MomentTable::vtilde_minus() const {
    Vec v(bid.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = bid[i].cost[2][0] - ask[i].cost[2][0];
    return v;
}

Vec MomentTable::d12_diag() const {
    Vec v(bid.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = bid[i].plain[1][2] + ask[i].plain[1][2];
    return v;
}

Vec MomentTable::d23_diag() const {
    Vec v(bid.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = bid[i].plain[2][3] + ask[i].plain[2][3];
    return v;
}

Vec MomentTable::vtilde21_sum() const {
    Vec v(bid.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = bid[i].cost[2][1] + ask[i].cost[2][1];
    return v;
}

double MomentTable::tr_d01() const {
    double s = 0.0;
    for (size_t i = 0; i < bid.size(); ++i) s += bid[i].plain[0][1] + ask[i].plain[0][1];
    return s;
}

double MomentTable::chi_tilde10() const {
    double s = 0.0;
    for (size_t i = 0; i < bid.size(); ++i) s += bid[i].cost[1][0] + ask[i].cost[1][0];
    return s;
}

double MomentTable::chi_hat20() const {
    double s = 0.0;
    for (size_t i = 0; i < bid.size(); ++i) s += bid[i].cost2[2][0] + ask[i].cost2[2][0];
    return s;
}

} // namespace mmq
