#include "mmq/quotes.hpp"

#include <cmath>
#include <ostream>

#include "mmq/errors.hpp"
#include "mmq/hamiltonian.hpp"

namespace mmq {

double delta_star(const IntensityCurve& curve, double xi, double z, double p,
                  std::optional<double> floor) {
    double delta;
    if (curve.is_exponential()) {
        const double k = curve.decay();
        delta = p + (xi > 0.0 ? std::log1p(xi * z / k) / (xi * z) : 1.0 / k);
    } else {
        const HamEval h = ham_eval(curve, xi, z, p, floor);
        const double target = xi > 0.0 ? xi * z * h.value - h.derivative : -h.derivative;
        delta = curve.inverse(target);
    }
    if (floor) delta = std::max(delta, -*floor);
    return delta;
}

namespace {

bool bid_gated(const CheckedSpec& spec, const Vec& q, int asset, double z) {
    return q[asset] + z > spec.assets()[asset].Q + 1e-9 * z;
}

bool ask_gated(const CheckedSpec& spec, const Vec& q, int asset, double z) {
    return q[asset] - z < -spec.assets()[asset].Q - 1e-9 * z;
}

// Assembles the QuoteSet given a per-channel p-argument callback
// p(asset, tier_side, z) evaluated only for non-gated sides.
template <typename PArg>
QuoteSet assemble(const CheckedSpec& spec, const Vec& q, PArg&& parg) {
    const double xi = effective_xi(spec);
    QuoteSet out;
    for (int i = 0; i < spec.d(); ++i) {
        const double s0 = spec.assets()[i].s0;
        const auto& tiers = spec.tiers(i);
        for (int n = 0; n < static_cast<int>(tiers.size()); ++n) {
            // A tier quotes one entry per size atom of each side; bid and ask
            // rows pair up by atom index when the distributions match, which
            // covers the symmetric case cleanly.
            const size_t rows =
                std::max(tiers[n].bid.sizes.atoms.size(), tiers[n].ask.sizes.atoms.size());
            for (size_t a = 0; a < rows; ++a) {
                QuoteEntry e;
                e.asset = i;
                e.tier = n;
                const bool has_bid = a < tiers[n].bid.sizes.atoms.size();
                const bool has_ask = a < tiers[n].ask.sizes.atoms.size();
                e.size = has_bid ? tiers[n].bid.sizes.atoms[a].size
                                 : tiers[n].ask.sizes.atoms[a].size;
                e.bid.withdrawn = true;
                e.ask.withdrawn = true;
                if (has_bid) {
                    const double z = tiers[n].bid.sizes.atoms[a].size;
                    if (!bid_gated(spec, q, i, z)) {
                        const double p = parg(i, n, true, z, tiers[n].bid.fixed_cost);
                        e.bid.offset =
                            delta_star(tiers[n].bid.intensity, xi, z, p, spec.delta_floor());
                        e.bid.price = s0 - e.bid.offset;
                        e.bid.withdrawn = false;
                    }
                }
                if (has_ask) {
                    const double z = tiers[n].ask.sizes.atoms[a].size;
                    if (!ask_gated(spec, q, i, z)) {
                        const double p = parg(i, n, false, z, tiers[n].ask.fixed_cost);
                        e.ask.offset =
                            delta_star(tiers[n].ask.intensity, xi, z, p, spec.delta_floor());
                        e.ask.price = s0 + e.ask.offset;
                        e.ask.withdrawn = false;
                    }
                }
                out.push_back(e);
            }
        }
    }
    return out;
}

} // namespace

QuoteSet greedy_quotes(const ThetaSource& source, const CheckedSpec& spec, double t,
                       const Vec& q) {
    const double here = source.theta(t, q);
    return assemble(spec, q, [&](int i, int, bool bid, double z, double c) {
        Vec qn = q;
        qn[i] += bid ? z : -z;
        return (here - source.theta(t, qn) + c) / z;
    });
}

QuoteSet greedy_quotes(const RiccatiSolution& sol, const CheckedSpec& spec, double t,
                       const Vec& q) {
    const Mat a = sol.eval_A(t);
    const Vec b = sol.eval_B(t);
    const Vec aq = a * q;
    return assemble(spec, q, [&](int i, int, bool bid, double z, double c) {
        const double sgn = bid ? 1.0 : -1.0;
        return sgn * (2.0 * aq[i] + b[i]) + z * a(i, i) + c / z;
    });
}

QuoteSet asymptotic_quotes(const AsymptoticLimits& limits, const CheckedSpec& spec, const Vec& q) {
    if (!limits.image_condition_ok || !limits.B_inf)
        throw NumericalError(
            "asymptotic_quotes: image condition fails, no constant asymptotic "
            "approximation of the quotes");
    const Mat& a = limits.A_inf;
    const Vec& b = *limits.B_inf;
    const Vec aq = a * q;
    return assemble(spec, q, [&](int i, int, bool bid, double z, double c) {
        const double sgn = bid ? 1.0 : -1.0;
        return sgn * (2.0 * aq[i] + b[i]) + z * a(i, i) + c / z;
    });
}

std::vector<SpreadSkew> spread_skew(const AsymptoticLimits& limits, const CheckedSpec& spec,
                                    const Vec& q) {
    if (spec.has_drift())
        throw ValidationError("spread_skew: defined for zero drift only");
    for (int i = 0; i < spec.d(); ++i) {
        const auto& tiers = spec.tiers(i);
        const SizeDist dirac = SizeDist::dirac(spec.assets()[i].z);
        if (tiers.size() != 1 || !(tiers[0].bid.intensity == tiers[0].ask.intensity) ||
            !tiers[0].bid.intensity.is_exponential() || !(tiers[0].bid.sizes == dirac) ||
            !(tiers[0].ask.sizes == dirac) || tiers[0].bid.fixed_cost != 0.0 ||
            tiers[0].ask.fixed_cost != 0.0)
            throw ValidationError("spread_skew: requires the symmetric exponential configuration");
    }
    if (!limits.image_condition_ok)
        throw NumericalError("spread_skew: image condition fails");

    const double gamma = spec.gamma();
    const double xi = effective_xi(spec);
    const double sg = std::sqrt(gamma);
    std::vector<SpreadSkew> out(spec.d());
    const Mat& g = limits.A_inf;  // A_inf = (sqrt(gamma)/2) Gamma
    for (int i = 0; i < spec.d(); ++i) {
        const double z = spec.assets()[i].z;
        const double k = spec.tiers(i)[0].bid.intensity.decay();
        double gq = 0.0;
        for (int j = 0; j < spec.d(); ++j) gq += q[j] * g(j, i);
        // A_inf already carries sqrt(gamma)/2: 1/2 sqrt(g) z Gamma_ii = z A_inf_ii.
        const double base = xi > 0.0 ? std::log1p(xi * z / k) / (xi * z) : 1.0 / k;
        out[i].half_spread = z * g(i, i) + base;
        out[i].skew = -2.0 * gq;  // -sqrt(gamma) q' Gamma e_i
        (void)sg;
    }
    return out;
}

void export_quotes_csv(const QuoteSet& quotes, double t, std::ostream& out) {
    out << "t,asset,tier,size,side,offset,price,gated\n";
    out.precision(17);
    for (const QuoteEntry& e : quotes) {
        out << t << "," << e.asset << "," << e.tier << "," << e.size << ",bid,";
        if (e.bid.withdrawn)
            out << ",,1\n";
        else
            out << e.bid.offset << "," << e.bid.price << ",0\n";
        out << t << "," << e.asset << "," << e.tier << "," << e.size << ",ask,";
        if (e.ask.withdrawn)
            out << ",,1\n";
        else
            out << e.ask.offset << "," << e.ask.price << ",0\n";
    }
}

} // namespace mmq
