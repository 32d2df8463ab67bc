#include "mmq/sim.hpp"

#include <cmath>
#include <ostream>

#include "mmq/errors.hpp"
#include "mmq/quotes.hpp"
#include "mmq/rng.hpp"
#include "mmq/threading.hpp"

namespace mmq {

Strategy Strategy::greedy_proxy(const RiccatiSolution& sol) {
    Strategy s;
    s.kind = StrategyKind::GreedyProxy;
    s.solution = &sol;
    return s;
}

Strategy Strategy::greedy_exact(const ThetaGrid& grid) {
    Strategy s;
    s.kind = StrategyKind::GreedyExact;
    s.theta_grid = &grid;
    return s;
}

Strategy Strategy::asymptotic(const AsymptoticLimits& limits) {
    Strategy s;
    s.kind = StrategyKind::Asymptotic;
    s.limits = &limits;
    return s;
}

Strategy Strategy::constant(std::vector<std::pair<double, double>> per_asset) {
    Strategy s;
    s.kind = StrategyKind::ConstantOffsets;
    s.offsets = std::move(per_asset);
    return s;
}

namespace {

struct SimChannel {
    int asset = 0;
    int tier = 0;
    bool bid = true;
    double z = 1.0;
    double weight = 1.0;
    double cost = 0.0;
    const IntensityCurve* curve = nullptr;
};

std::vector<SimChannel> build_channels(const CheckedSpec& spec) {
    std::vector<SimChannel> channels;
    for (int i = 0; i < spec.d(); ++i) {
        const auto& tiers = spec.tiers(i);
        for (int n = 0; n < static_cast<int>(tiers.size()); ++n) {
            for (int side = 0; side < 2; ++side) {
                const TierSide& ts = side == 0 ? tiers[n].bid : tiers[n].ask;
                for (const auto& atom : ts.sizes.atoms) {
                    SimChannel ch;
                    ch.asset = i;
                    ch.tier = n;
                    ch.bid = side == 0;
                    ch.z = atom.size;
                    ch.weight = atom.weight;
                    ch.cost = ts.fixed_cost;
                    ch.curve = &ts.intensity;
                    channels.push_back(ch);
                }
            }
        }
    }
    return channels;
}

// A(t), B(t) tables on the simulation grid for the proxy strategy; linear
// interpolation in between (the quote drift over one step is tiny, and the
// majorant safety factor covers it).
struct ProxyTables {
    double t0 = 0.0, h = 1.0;
    long long m = 0;
    std::vector<Mat> a;
    std::vector<Vec> b;

    void eval(double t, Mat& a_out, Vec& b_out) const {
        const double pos = std::clamp((t - t0) / h, 0.0, static_cast<double>(m));
        const long long lo = std::min(static_cast<long long>(pos), m - 1);
        const double w = pos - static_cast<double>(lo);
        const Mat& a0 = a[lo];
        const Mat& a1 = a[lo + 1];
        const int d = a0.rows();
        if (a_out.rows() != d) a_out = Mat(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) a_out(i, j) = (1.0 - w) * a0(i, j) + w * a1(i, j);
        if (static_cast<int>(b_out.size()) != d) b_out.assign(d, 0.0);
        for (int i = 0; i < d; ++i) b_out[i] = (1.0 - w) * b[lo][i] + w * b[lo + 1][i];
    }
};

} // namespace

std::vector<PathResult> simulate(const CheckedSpec& spec, const Strategy& strategy,
                                 long long n_paths, std::uint64_t seed, const SimOptions& opts) {
    if (n_paths < 1) throw ValidationError("simulate: n_paths must be >= 1");
    const int d = spec.d();
    const double T = spec.horizon();
    const double xi = effective_xi(spec);

    switch (strategy.kind) {
        case StrategyKind::GreedyProxy:
            if (!strategy.solution) throw ValidationError("simulate: strategy lacks a solution");
            break;
        case StrategyKind::GreedyExact:
            if (!strategy.theta_grid) throw ValidationError("simulate: strategy lacks a theta grid");
            break;
        case StrategyKind::Asymptotic:
            if (!strategy.limits) throw ValidationError("simulate: strategy lacks limits");
            if (!strategy.limits->image_condition_ok || !strategy.limits->B_inf)
                throw NumericalError("simulate: no constant asymptotic quotes for this spec");
            break;
        case StrategyKind::ConstantOffsets:
            if (static_cast<int>(strategy.offsets.size()) != d)
                throw ValidationError("simulate: constant offsets must list every asset");
            break;
    }

    const std::vector<SimChannel> channels = build_channels(spec);
    const Mat chol = cholesky(spec.covariance());

    const double h_req = opts.step_hint > 0.0 ? opts.step_hint : T / 2000.0;
    const long long m = std::max<long long>(1, static_cast<long long>(std::llround(T / h_req)));
    const double h = T / static_cast<double>(m);

    ProxyTables tables;
    if (strategy.kind == StrategyKind::GreedyProxy) {
        tables.t0 = 0.0;
        tables.h = h;
        tables.m = m;
        tables.a.resize(m + 1);
        tables.b.resize(m + 1);
        for (long long j = 0; j <= m; ++j) {
            const double t = h * static_cast<double>(j);
            tables.a[j] = strategy.solution->eval_A(std::min(t, T));
            tables.b[j] = strategy.solution->eval_B(std::min(t, T));
        }
    }

    std::vector<PathResult> results(static_cast<size_t>(n_paths));

    auto run_path = [&](long long path) {
        PathResult& res = results[static_cast<size_t>(path)];
        CounterRng jump_rng(seed, static_cast<std::uint64_t>(path), 0);
        CounterRng price_rng(seed, static_cast<std::uint64_t>(path), 1);

        Vec q = spec.q0();
        double cash = 0.0;
        Vec s(d);
        for (int i = 0; i < d; ++i) s[i] = spec.assets()[i].s0;
        double price_time = 0.0;
        double risk_time = 0.0;
        double risk_integral = 0.0;

        Mat a_work;
        Vec b_work, aq_work(d, 0.0), zeta(d, 0.0);
        std::vector<double> offsets(channels.size(), 0.0);
        std::vector<bool> live(channels.size(), false);
        std::vector<double> rates(channels.size(), 0.0);

        auto advance_price = [&](double to) {
            const double dt = to - price_time;
            if (dt <= 0.0) return;
            for (int i = 0; i < d; ++i) zeta[i] = price_rng.next_normal();
            const double sq = std::sqrt(dt);
            for (int i = 0; i < d; ++i) {
                double acc = spec.drift()[i] * dt;
                for (int j = 0; j <= i; ++j) acc += sq * chol(i, j) * zeta[j];
                s[i] += acc;
            }
            price_time = to;
        };

        auto advance_risk = [&](double to) {
            if (to <= risk_time) return;
            double qsq = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) qsq += q[i] * spec.covariance()(i, j) * q[j];
            risk_integral += qsq * (to - risk_time);
            risk_time = to;
        };

        // Per-channel offsets at (t, q); gated channels are marked dead.
        auto refresh_quotes = [&](double t) {
            switch (strategy.kind) {
                case StrategyKind::GreedyProxy: {
                    tables.eval(t, a_work, b_work);
                    for (int i = 0; i < d; ++i) {
                        double acc = 0.0;
                        for (int j = 0; j < d; ++j) acc += a_work(i, j) * q[j];
                        aq_work[i] = acc;
                    }
                    break;
                }
                case StrategyKind::Asymptotic: {
                    const Mat& a_inf = strategy.limits->A_inf;
                    for (int i = 0; i < d; ++i) {
                        double acc = 0.0;
                        for (int j = 0; j < d; ++j) acc += a_inf(i, j) * q[j];
                        aq_work[i] = acc;
                    }
                    break;
                }
                default:
                    break;
            }
            for (size_t c = 0; c < channels.size(); ++c) {
                const SimChannel& ch = channels[c];
                const double limit = spec.assets()[ch.asset].Q;
                const bool gated = ch.bid ? q[ch.asset] + ch.z > limit + 1e-9 * ch.z
                                          : q[ch.asset] - ch.z < -limit - 1e-9 * ch.z;
                live[c] = !gated;
                if (gated) continue;
                const double sgn = ch.bid ? 1.0 : -1.0;
                double p = 0.0;
                switch (strategy.kind) {
                    case StrategyKind::GreedyProxy:
                        p = sgn * (2.0 * aq_work[ch.asset] + b_work[ch.asset]) +
                            ch.z * a_work(ch.asset, ch.asset) + ch.cost / ch.z;
                        offsets[c] = delta_star(*ch.curve, xi, ch.z, p, spec.delta_floor());
                        break;
                    case StrategyKind::Asymptotic:
                        p = sgn * (2.0 * aq_work[ch.asset] + (*strategy.limits->B_inf)[ch.asset]) +
                            ch.z * strategy.limits->A_inf(ch.asset, ch.asset) + ch.cost / ch.z;
                        offsets[c] = delta_star(*ch.curve, xi, ch.z, p, spec.delta_floor());
                        break;
                    case StrategyKind::GreedyExact: {
                        const double here = strategy.theta_grid->query(t, q);
                        Vec qn = q;
                        qn[ch.asset] += sgn * ch.z;
                        p = (here - strategy.theta_grid->query(t, qn) + ch.cost) / ch.z;
                        offsets[c] = delta_star(*ch.curve, xi, ch.z, p, spec.delta_floor());
                        break;
                    }
                    case StrategyKind::ConstantOffsets: {
                        const auto& [db, da] = strategy.offsets[ch.asset];
                        double delta = ch.bid ? db : da;
                        if (spec.delta_floor()) delta = std::max(delta, -*spec.delta_floor());
                        offsets[c] = delta;
                        break;
                    }
                }
            }
        };

        auto total_rate = [&] {
            double sum = 0.0;
            for (size_t c = 0; c < channels.size(); ++c) {
                rates[c] = live[c] ? channels[c].weight * (*channels[c].curve)(offsets[c]) : 0.0;
                sum += rates[c];
            }
            return sum;
        };

        for (long long j = 0; j < m; ++j) {
            const double step_start = h * static_cast<double>(j);
            const double step_end = std::min(T, h * static_cast<double>(j + 1));
            double anchor = step_start;
            refresh_quotes(anchor);
            double majorant = opts.majorant_safety * total_rate();
            while (majorant > 0.0) {
                const double cand = anchor + jump_rng.next_exponential() / majorant;
                if (cand >= step_end) break;
                refresh_quotes(cand);
                const double lam = total_rate();
                if (lam > majorant) ++res.majorant_violations;
                const double u = jump_rng.next_uniform();
                if (u * majorant < lam) {
                    // Execution: pick the channel, settle cash at the
                    // candidate-time price and offset.
                    double pick = jump_rng.next_uniform() * lam;
                    size_t chosen = channels.size() - 1;
                    for (size_t c = 0; c < channels.size(); ++c) {
                        pick -= rates[c];
                        if (pick <= 0.0) {
                            chosen = c;
                            break;
                        }
                    }
                    const SimChannel& ch = channels[chosen];
                    advance_price(cand);
                    advance_risk(cand);
                    Trade tr;
                    tr.time = cand;
                    tr.asset = ch.asset;
                    tr.tier = ch.tier;
                    tr.side = ch.bid ? 'b' : 'a';
                    tr.size = ch.z;
                    tr.offset = offsets[chosen];
                    tr.ref_price = s[ch.asset];
                    if (ch.bid) {
                        q[ch.asset] += ch.z;
                        tr.cash_delta = tr.offset * ch.z - ch.cost - tr.ref_price * ch.z;
                    } else {
                        q[ch.asset] -= ch.z;
                        tr.cash_delta = tr.offset * ch.z - ch.cost + tr.ref_price * ch.z;
                    }
                    cash += tr.cash_delta;
                    res.trades.push_back(tr);
                    anchor = cand;
                    refresh_quotes(anchor);
                    majorant = opts.majorant_safety * total_rate();
                } else {
                    anchor = cand;
                }
            }
            advance_risk(step_end);
            if (opts.record_path) {
                advance_price(step_end);
                res.samples.push_back(PathSample{step_end, q, cash});
            }
        }

        advance_price(T);
        advance_risk(T);
        res.cash_T = cash;
        res.q_T = q;
        res.s_T = s;
        res.risk_integral = risk_integral;
    };

    parallel_chunks(n_paths, opts.threads, [&](long long begin, long long end) {
        for (long long p = begin; p < end; ++p) run_path(p);
    });
    return results;
}

ObjectiveEstimate evaluate_objective(const std::vector<PathResult>& results,
                                     const CheckedSpec& spec) {
    ObjectiveEstimate est;
    est.n = static_cast<long long>(results.size());
    if (results.empty()) return est;
    std::vector<double> vals(results.size());
    for (size_t p = 0; p < results.size(); ++p) {
        const PathResult& r = results[p];
        const double wealth = r.cash_T + dot(r.q_T, r.s_T);
        vals[p] = spec.objective() == Objective::ModelA
                      ? -std::exp(-spec.gamma() * wealth)
                      : wealth - 0.5 * spec.gamma() * r.risk_integral;
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    est.mean = mean;
    est.std_error = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1) /
                                                static_cast<double>(vals.size()))
                                    : 0.0;
    return est;
}

void export_trades_csv(const std::vector<PathResult>& results, long long path_index,
                       std::ostream& out) {
    if (path_index < 0 || path_index >= static_cast<long long>(results.size()))
        throw ValidationError("export_trades_csv: path index out of range");
    out << "time,asset,tier,side,size,offset,ref_price,cash_delta\n";
    out.precision(17);
    for (const Trade& tr : results[static_cast<size_t>(path_index)].trades) {
        out << tr.time << "," << tr.asset << "," << tr.tier << "," << tr.side << "," << tr.size
            << "," << tr.offset << "," << tr.ref_price << "," << tr.cash_delta << "\n";
    }
}

} // namespace mmq
