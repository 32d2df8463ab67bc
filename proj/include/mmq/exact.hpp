#pragma once

#include <cstdint>
#include <iosfwd>

#include "mmq/model.hpp"

namespace mmq {

/// Product lattice q in prod_i (z^i Z intersect [-Q^i, Q^i]) with flat
/// indexing. Coordinates are stored as integers in [-steps_i, steps_i],
/// steps_i = Q^i / z^i.
class InventoryGrid {
public:
    InventoryGrid(const CheckedSpec& spec, std::size_t state_cap);

    int d() const { return static_cast<int>(steps_.size()); }
    std::size_t states() const { return states_; }
    int steps(int asset) const { return steps_[asset]; }
    double unit(int asset) const { return unit_[asset]; }

    /// Lattice coordinate of state `idx` along `asset`, in [-steps, steps].
    int coord(std::size_t idx, int asset) const {
        return static_cast<int>((idx / stride_[asset]) % size_[asset]) - steps_[asset];
    }
    Vec q_of(std::size_t idx) const;
    /// Flat index of q; throws ValidationError off-lattice.
    std::size_t index_of(const Vec& q) const;

    /// Index of the state shifted by `m` lattice cells along `asset`, or -1
    /// when the shift leaves the risk limits.
    long long shifted(std::size_t idx, int asset, int m) const {
        const int c = coord(idx, asset) + m;
        if (c < -steps_[asset] || c > steps_[asset]) return -1;
        return static_cast<long long>(idx) + static_cast<long long>(m) * stride_[asset];
    }

private:
    std::vector<int> steps_;
    std::vector<std::size_t> size_, stride_;
    Vec unit_;
    std::size_t states_ = 1;
};

struct ExactOptions {
    double dt = -1.0;                  // <= 0 selects horizon / 2000
    std::size_t state_cap = 2'000'000;
};

/// theta values on the full time grid t_0 = 0, ..., t_M = T for every lattice
/// state. theta(T, .) = 0 by the terminal condition.
class ThetaGrid {
public:
    const std::vector<double>& times() const { return times_; }
    const InventoryGrid& grid() const { return grid_; }
    double horizon() const { return times_.back(); }

    double value(std::size_t time_idx, std::size_t state) const {
        return values_[time_idx][state];
    }
    /// Linear interpolation in t between the bracketing nodes; exact at
    /// nodes. q must be on the lattice.
    double query(double t, const Vec& q) const;

private:
    friend ThetaGrid solve_hj(const CheckedSpec& spec, const ExactOptions& opts);
    explicit ThetaGrid(InventoryGrid grid) : grid_(std::move(grid)) {}

    InventoryGrid grid_;
    std::vector<double> times_;
    std::vector<std::vector<double>> values_;   // [time][state]
};

/// Right-hand side of the backward (in remaining time) Hamilton-Jacobi system
/// at a full lattice state vector: drift + risk penalty + indicator-gated
/// Hamiltonian terms, per size atom. Exposed for tests and oracles.
void hj_rhs(const CheckedSpec& spec, const InventoryGrid& grid, const std::vector<double>& theta,
            std::vector<double>& out);

/// Classical fixed-step RK4 integration of the Hamilton-Jacobi system from
/// the terminal condition back to t = 0. Deterministic.
ThetaGrid solve_hj(const CheckedSpec& spec, const ExactOptions& opts = {});

/// CSV dump (t, q_1..q_d, theta), optionally subsampling time nodes.
void export_theta_csv(const ThetaGrid& grid, std::ostream& out, std::size_t time_stride = 1);

} // namespace mmq
