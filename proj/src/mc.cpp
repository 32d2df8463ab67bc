#include "mmq/mc.hpp"

#include <cmath>

#include "mmq/errors.hpp"
#include "mmq/rng.hpp"
#include "mmq/threading.hpp"

namespace mmq {

namespace {

struct McChannel {
    int asset = 0;
    double z = 1.0;
    double weight = 1.0;
    double cost = 0.0;
    bool bid = true;
    QuadraticCoeffs quad;
    // Exact Hamiltonian evaluation.
    const IntensityCurve* curve = nullptr;
    bool closed_form = false;
    double h0 = 0.0, k = 0.0;
    double xi = 0.0;
    bool has_floor = false;
    double floor_arg = 0.0;
};

std::vector<McChannel> build_channels(const CheckedSpec& spec, const CoeffSet& coeffs) {
    const double xi = effective_xi(spec);
    std::vector<McChannel> channels;
    for (int i = 0; i < spec.d(); ++i) {
        const auto& tiers = spec.tiers(i);
        for (size_t n = 0; n < tiers.size(); ++n) {
            for (int side = 0; side < 2; ++side) {
                const TierSide& ts = side == 0 ? tiers[n].bid : tiers[n].ask;
                const auto& qs = side == 0 ? coeffs[i][n].bid : coeffs[i][n].ask;
                for (size_t a = 0; a < ts.sizes.atoms.size(); ++a) {
                    McChannel ch;
                    ch.asset = i;
                    ch.z = ts.sizes.atoms[a].size;
                    ch.weight = ts.sizes.atoms[a].weight;
                    ch.cost = ts.fixed_cost;
                    ch.bid = side == 0;
                    ch.quad = qs[a];
                    ch.curve = &ts.intensity;
                    ch.xi = xi;
                    ch.has_floor = spec.delta_floor().has_value();
                    ch.floor_arg = spec.delta_floor().value_or(0.0);
                    if (ts.intensity.is_exponential()) {
                        ch.closed_form = true;
                        ch.k = ts.intensity.decay();
                        ch.h0 = ts.intensity.scale() / ch.k * ham_exp_cxi(ch.k, xi, ch.z);
                    }
                    channels.push_back(ch);
                }
            }
        }
    }
    return channels;
}

double exact_ham(const McChannel& ch, double p) {
    if (ch.closed_form) {
        if (ch.has_floor) {
            const double shift =
                ch.xi > 0.0 ? std::log1p(ch.xi * ch.z / ch.k) / (ch.xi * ch.z) : 1.0 / ch.k;
            if (p + shift < -ch.floor_arg) {
                const double lam = (*ch.curve)(-ch.floor_arg);
                if (ch.xi > 0.0)
                    return lam / (ch.xi * ch.z) *
                           (1.0 - std::exp(-ch.xi * ch.z * (-ch.floor_arg - p)));
                return lam * (-ch.floor_arg - p);
            }
        }
        return ch.h0 * std::exp(-ch.k * p);
    }
    return ham_eval(*ch.curve, ch.xi, ch.z, p,
                    ch.has_floor ? std::optional<double>(ch.floor_arg) : std::nullopt)
        .value;
}

// Evaluation frame: A(s), B(s) by pointer (grid nodes are shared, event
// times use the local scratch), plus A(s) q for the path inventory.
struct Frame {
    const Mat* a = nullptr;
    const Vec* b = nullptr;
    Vec aq;
    Mat a_scratch;
    Vec b_scratch;
};

// p-argument of channel ch at the current frame.
double p_arg(const Frame& f, const McChannel& ch) {
    const double sgn = ch.bid ? 1.0 : -1.0;
    return sgn * (2.0 * f.aq[ch.asset] + (*f.b)[ch.asset]) +
           ch.z * (*f.a)(ch.asset, ch.asset) + ch.cost / ch.z;
}

} // namespace

CorrectionEstimate estimate_eta(const CheckedSpec& spec, const CoeffSet& coeffs,
                                const RiccatiSolution& sol, double t, const Vec& q,
                                long long n_paths, std::uint64_t seed, const McOptions& opts) {
    if (n_paths < 1) throw ValidationError("estimate_eta: n_paths must be >= 1");
    const double T = sol.horizon();
    if (t < -1e-12 || t > T + 1e-12) throw ValidationError("estimate_eta: t outside [0, T]");
    if (static_cast<int>(q.size()) != spec.d())
        throw ValidationError("estimate_eta: inventory dimension mismatch");

    CorrectionEstimate est;
    est.n_paths = n_paths;
    est.seed = seed;
    const double span = T - t;
    if (span <= 0.0) return est;

    const std::vector<McChannel> channels = build_channels(spec, coeffs);
    const double h_step = opts.step_hint > 0.0 ? opts.step_hint : T / 1000.0;
    const long long m = std::max<long long>(1, static_cast<long long>(std::llround(span / h_step)));
    const double h = span / static_cast<double>(m);

    // Shared A(t), B(t) tables on the step grid; exact evaluations at event
    // times are cheap enough at the rates involved.
    std::vector<Mat> a_nodes(m + 1);
    std::vector<Vec> b_nodes(m + 1);
    for (long long j = 0; j <= m; ++j) {
        const double s = t + h * static_cast<double>(j);
        a_nodes[j] = sol.eval_A(std::min(s, T));
        b_nodes[j] = sol.eval_B(std::min(s, T));
    }

    const Vec q_limit = [&] {
        Vec lim(spec.d());
        for (int i = 0; i < spec.d(); ++i) lim[i] = spec.assets()[i].Q;
        return lim;
    }();

    std::vector<double> integrals(static_cast<size_t>(n_paths), 0.0);
    std::vector<long long> clamps(static_cast<size_t>(n_paths), 0);
    std::vector<long long> violations(static_cast<size_t>(n_paths), 0);
    std::vector<long long> jumps(static_cast<size_t>(n_paths), 0);
    std::vector<double> rate_integrals(static_cast<size_t>(n_paths), 0.0);

    const int d = spec.d();
    auto run_path = [&](long long path) {
        CounterRng rng(seed, static_cast<std::uint64_t>(path), 0);
        Vec qq = q;
        Frame frame;
        frame.aq.assign(d, 0.0);
        long long clamp_count = 0;

        auto refresh_aq = [&] {
            for (int i = 0; i < d; ++i) {
                double acc = 0.0;
                for (int j2 = 0; j2 < d; ++j2) acc += (*frame.a)(i, j2) * qq[j2];
                frame.aq[i] = acc;
            }
        };
        auto load_frame_node = [&](long long j) {
            frame.a = &a_nodes[j];
            frame.b = &b_nodes[j];
            refresh_aq();
        };
        auto load_frame_exact = [&](double s) {
            frame.a_scratch = sol.eval_A(std::min(s, T));
            frame.b_scratch = sol.eval_B(std::min(s, T));
            frame.a = &frame.a_scratch;
            frame.b = &frame.b_scratch;
            refresh_aq();
        };

        // Raw (clamped) proxy intensity of one channel, gated at the limits.
        auto channel_rate = [&](const McChannel& ch) {
            if (opts.gate_at_limits) {
                if (ch.bid && qq[ch.asset] + ch.z > q_limit[ch.asset] + 1e-9 * ch.z) return 0.0;
                if (!ch.bid && qq[ch.asset] - ch.z < -q_limit[ch.asset] - 1e-9 * ch.z) return 0.0;
            }
            const double raw = -ch.quad.derivative(p_arg(frame, ch));
            if (raw < 0.0) {
                ++clamp_count;
                return 0.0;
            }
            return ch.weight * raw;
        };
        auto total_rate = [&] {
            double s = 0.0;
            for (const McChannel& ch : channels) s += channel_rate(ch);
            return s;
        };
        auto integrand = [&] {
            double s = 0.0;
            for (const McChannel& ch : channels) {
                const double p = p_arg(frame, ch);
                s += ch.weight * ch.z * (exact_ham(ch, p) - ch.quad.value(p));
            }
            return s;
        };

        double integral = 0.0;
        double rate_integral = 0.0;
        long long jump_count = 0;

        double seg_t = t;
        load_frame_node(0);
        double seg_f = integrand();
        double seg_rate = total_rate();

        auto close_segment = [&](double s_end, double f_end, double rate_end) {
            integral += 0.5 * (s_end - seg_t) * (seg_f + f_end);
            rate_integral += 0.5 * (s_end - seg_t) * (seg_rate + rate_end);
            seg_t = s_end;
            seg_f = f_end;
            seg_rate = rate_end;
        };

        for (long long j = 0; j < m; ++j) {
            const double step_end = t + h * static_cast<double>(j + 1);
            double anchor = seg_t;  // == t + h j, or the last jump time
            double majorant = opts.majorant_safety * seg_rate;
            for (;;) {
                if (majorant <= 0.0) break;
                const double wait = rng.next_exponential() / majorant;
                const double cand = anchor + wait;
                if (cand >= step_end) break;
                load_frame_exact(cand);
                double lam_total = total_rate();
                if (lam_total > majorant) ++violations[static_cast<size_t>(path)];
                const double u = rng.next_uniform();
                if (u * majorant < lam_total) {
                    // Fill: close the integrand segment with the pre-jump
                    // state, then apply the inventory change.
                    close_segment(cand, integrand(), lam_total);
                    double pick = rng.next_uniform() * lam_total;
                    const McChannel* chosen = &channels.back();
                    for (const McChannel& ch : channels) {
                        pick -= channel_rate(ch);
                        if (pick <= 0.0) {
                            chosen = &ch;
                            break;
                        }
                    }
                    qq[chosen->asset] += chosen->bid ? chosen->z : -chosen->z;
                    ++jump_count;
                    refresh_aq();
                    seg_f = integrand();
                    seg_rate = total_rate();
                    anchor = cand;
                    majorant = opts.majorant_safety * seg_rate;
                } else {
                    anchor = cand;
                }
            }
            // Step boundary: evaluate with the grid-node frame.
            load_frame_node(j + 1);
            close_segment(step_end, integrand(), total_rate());
        }

        integrals[static_cast<size_t>(path)] = integral;
        clamps[static_cast<size_t>(path)] = clamp_count;
        jumps[static_cast<size_t>(path)] = jump_count;
        rate_integrals[static_cast<size_t>(path)] = rate_integral;
    };

    parallel_chunks(n_paths, opts.threads, [&](long long begin, long long end) {
        for (long long p = begin; p < end; ++p) run_path(p);
    });

    // Index-ordered reduction keeps the estimate bit-identical across thread
    // counts.
    double mean = 0.0;
    for (long long p = 0; p < n_paths; ++p) mean += integrals[static_cast<size_t>(p)];
    mean /= static_cast<double>(n_paths);
    double ss = 0.0;
    for (long long p = 0; p < n_paths; ++p) {
        const double d = integrals[static_cast<size_t>(p)] - mean;
        ss += d * d;
    }
    est.mean = mean;
    est.std_error =
        n_paths > 1 ? std::sqrt(ss / static_cast<double>(n_paths - 1) / static_cast<double>(n_paths))
                    : 0.0;
    for (long long p = 0; p < n_paths; ++p) {
        est.clamp_events += clamps[static_cast<size_t>(p)];
        est.majorant_violations += violations[static_cast<size_t>(p)];
        est.mean_jumps += static_cast<double>(jumps[static_cast<size_t>(p)]);
        est.mean_intensity_integral += rate_integrals[static_cast<size_t>(p)];
    }
    est.mean_jumps /= static_cast<double>(n_paths);
    est.mean_intensity_integral /= static_cast<double>(n_paths);
    if (!std::isfinite(est.mean))
        throw NumericalError("estimate_eta: non-finite estimate (t=" + std::to_string(t) + ")");
    return est;
}

double corrected_theta(const RiccatiSolution& sol, const CorrectionEstimate& est, double t,
                       const Vec& q) {
    return sol.theta_check(t, q) + est.mean;
}

} // namespace mmq
