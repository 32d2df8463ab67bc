#include "mmq/exact.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "mmq/errors.hpp"
#include "mmq/hamiltonian.hpp"

namespace mmq {

InventoryGrid::InventoryGrid(const CheckedSpec& spec, std::size_t state_cap) {
    const int d = spec.d();
    steps_.resize(d);
    size_.resize(d);
    stride_.resize(d);
    unit_.resize(d);
    states_ = 1;
    for (int i = 0; i < d; ++i) {
        const AssetSpec& a = spec.assets()[i];
        unit_[i] = a.z;
        steps_[i] = static_cast<int>(std::llround(a.Q / a.z));
        size_[i] = static_cast<std::size_t>(2 * steps_[i] + 1);
        if (states_ > (state_cap + 1) / size_[i])
            states_ = state_cap + 1;  // saturate instead of overflowing
        else
            states_ *= size_[i];
    }
    if (states_ > state_cap)
        throw ValidationError("inventory grid: state count exceeds cap (" +
                              std::to_string(state_cap) + ")");
    // Last asset varies fastest.
    std::size_t s = 1;
    for (int i = d - 1; i >= 0; --i) {
        stride_[i] = s;
        s *= size_[i];
    }
}

Vec InventoryGrid::q_of(std::size_t idx) const {
    Vec q(d());
    for (int i = 0; i < d(); ++i) q[i] = coord(idx, i) * unit_[i];
    return q;
}

std::size_t InventoryGrid::index_of(const Vec& q) const {
    if (static_cast<int>(q.size()) != d()) throw ValidationError("inventory: dimension mismatch");
    std::size_t idx = 0;
    for (int i = 0; i < d(); ++i) {
        const double c = q[i] / unit_[i];
        const long long ci = std::llround(c);
        if (std::fabs(c - ci) > 1e-9)
            throw ValidationError("inventory component " + std::to_string(i) +
                                  " is not on the lattice");
        if (ci < -steps_[i] || ci > steps_[i])
            throw ValidationError("inventory component " + std::to_string(i) +
                                  " outside the risk limits");
        idx += static_cast<std::size_t>(ci + steps_[i]) * stride_[i];
    }
    return idx;
}

namespace {

// One fill channel: (asset, tier, side, size atom), flattened for the sweep.
struct Channel {
    int asset = 0;
    int cells = 0;        // atom size in lattice cells (signed: +bid, -ask)
    double z = 1.0;
    double weight = 1.0;
    double cost = 0.0;
    bool closed_form = false;
    double h0 = 0.0, k = 0.0;  // H(z, p) = h0 exp(-k p) when closed_form
    const IntensityCurve* curve = nullptr;
    double xi = 0.0, floor_arg = 0.0;
    bool has_floor = false;
};

std::vector<Channel> build_channels(const CheckedSpec& spec, const InventoryGrid& grid) {
    const double xi = effective_xi(spec);
    std::vector<Channel> channels;
    for (int i = 0; i < spec.d(); ++i) {
        for (const TierSpec& tier : spec.tiers(i)) {
            for (int side = 0; side < 2; ++side) {
                const TierSide& ts = side == 0 ? tier.bid : tier.ask;
                for (const auto& atom : ts.sizes.atoms) {
                    Channel ch;
                    ch.asset = i;
                    ch.z = atom.size;
                    ch.weight = atom.weight;
                    ch.cost = ts.fixed_cost;
                    ch.xi = xi;
                    ch.curve = &ts.intensity;
                    ch.has_floor = spec.delta_floor().has_value();
                    ch.floor_arg = spec.delta_floor().value_or(0.0);
                    const double cells = atom.size / grid.unit(i);
                    const long long m = std::llround(cells);
                    if (std::fabs(cells - m) > 1e-9 || m < 1)
                        throw ValidationError(
                            "exact solver: size atom " + std::to_string(atom.size) +
                            " is not a multiple of the lattice unit for asset " +
                            std::to_string(i));
                    ch.cells = static_cast<int>(side == 0 ? m : -m);
                    if (ts.intensity.is_exponential()) {
                        // The closed form holds while the floor does not bind;
                        // the binding branch is handled at evaluation time.
                        ch.closed_form = true;
                        ch.k = ts.intensity.decay();
                        ch.h0 = ts.intensity.scale() / ch.k * ham_exp_cxi(ch.k, xi, atom.size);
                    }
                    channels.push_back(ch);
                }
            }
        }
    }
    return channels;
}

double channel_value(const Channel& ch, double p) {
    if (ch.closed_form) {
        if (ch.has_floor) {
            const double shift = ch.xi > 0.0
                                     ? std::log1p(ch.xi * ch.z / ch.k) / (ch.xi * ch.z)
                                     : 1.0 / ch.k;
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

struct RhsContext {
    const CheckedSpec* spec;
    const InventoryGrid* grid;
    std::vector<Channel> channels;
    std::vector<double> base;   // mu'q - (gamma/2) q'Sigma q per state
};

RhsContext make_context(const CheckedSpec& spec, const InventoryGrid& grid) {
    RhsContext ctx{&spec, &grid, build_channels(spec, grid), {}};
    ctx.base.resize(grid.states());
    const Mat& sig = spec.covariance();
    for (std::size_t s = 0; s < grid.states(); ++s) {
        const Vec q = grid.q_of(s);
        double v = dot(spec.drift(), q);
        for (int i = 0; i < spec.d(); ++i)
            for (int j = 0; j < spec.d(); ++j) v -= 0.5 * spec.gamma() * q[i] * sig(i, j) * q[j];
        ctx.base[s] = v;
    }
    return ctx;
}

void rhs_with_context(const RhsContext& ctx, const std::vector<double>& theta,
                      std::vector<double>& out) {
    const InventoryGrid& grid = *ctx.grid;
    out.assign(grid.states(), 0.0);
    for (std::size_t s = 0; s < grid.states(); ++s) out[s] = ctx.base[s];
    for (const Channel& ch : ctx.channels) {
        for (std::size_t s = 0; s < grid.states(); ++s) {
            const long long nb = grid.shifted(s, ch.asset, ch.cells);
            if (nb < 0) continue;
            const double p = (theta[s] - theta[static_cast<std::size_t>(nb)] + ch.cost) / ch.z;
            out[s] += ch.weight * ch.z * channel_value(ch, p);
        }
    }
}

} // namespace

void hj_rhs(const CheckedSpec& spec, const InventoryGrid& grid, const std::vector<double>& theta,
            std::vector<double>& out) {
    const RhsContext ctx = make_context(spec, grid);
    rhs_with_context(ctx, theta, out);
}

ThetaGrid solve_hj(const CheckedSpec& spec, const ExactOptions& opts) {
    InventoryGrid grid(spec, opts.state_cap);
    ThetaGrid result(grid);

    const double T = spec.horizon();
    const double dt_req = opts.dt > 0.0 ? opts.dt : T / 2000.0;
    const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(T / dt_req)));
    const double dt = T / static_cast<double>(m);

    result.times_.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j) result.times_[j] = T * static_cast<double>(j) / m;
    result.values_.assign(m + 1, std::vector<double>(result.grid_.states(), 0.0));

    const RhsContext ctx = make_context(spec, result.grid_);
    const std::size_t n = result.grid_.states();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);

    // theta(T) = 0; march backward, one RK4 stage set per node.
    for (std::size_t j = m; j > 0; --j) {
        const std::vector<double>& cur = result.values_[j];
        std::vector<double>& nxt = result.values_[j - 1];
        rhs_with_context(ctx, cur, k1);
        for (std::size_t s = 0; s < n; ++s) tmp[s] = cur[s] + 0.5 * dt * k1[s];
        rhs_with_context(ctx, tmp, k2);
        for (std::size_t s = 0; s < n; ++s) tmp[s] = cur[s] + 0.5 * dt * k2[s];
        rhs_with_context(ctx, tmp, k3);
        for (std::size_t s = 0; s < n; ++s) tmp[s] = cur[s] + dt * k3[s];
        rhs_with_context(ctx, tmp, k4);
        for (std::size_t s = 0; s < n; ++s) {
            nxt[s] = cur[s] + dt / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
            if (!std::isfinite(nxt[s]))
                throw NumericalError("solve_hj: non-finite theta at state " + std::to_string(s));
        }
    }
    return result;
}

double ThetaGrid::query(double t, const Vec& q) const {
    const double T = times_.back();
    if (t < -1e-12 || t > T * (1.0 + 1e-12) + 1e-12)
        throw ValidationError("query_theta: time outside [0, T]");
    const std::size_t s = grid_.index_of(q);
    const double pos = std::clamp(t / T, 0.0, 1.0) * static_cast<double>(times_.size() - 1);
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), times_.size() - 2);
    const double w = pos - static_cast<double>(lo);
    if (w <= 1e-12) return values_[lo][s];
    if (w >= 1.0 - 1e-12) return values_[lo + 1][s];
    return (1.0 - w) * values_[lo][s] + w * values_[lo + 1][s];
}

void export_theta_csv(const ThetaGrid& grid, std::ostream& out, std::size_t time_stride) {
    const int d = grid.grid().d();
    out << "t";
    for (int i = 0; i < d; ++i) out << ",q_" << i;
    out << ",theta\n";
    out.precision(17);
    if (time_stride == 0) time_stride = 1;
    for (std::size_t j = 0; j < grid.times().size(); j += time_stride) {
        for (std::size_t s = 0; s < grid.grid().states(); ++s) {
            out << grid.times()[j];
            const Vec q = grid.grid().q_of(s);
            for (int i = 0; i < d; ++i) out << "," << q[i];
            out << "," << grid.value(j, s) << "\n";
        }
    }
}

} // namespace mmq
