#pragma once

#include <cstdint>
#include <iosfwd>

#include "mmq/closedform.hpp"
#include "mmq/exact.hpp"
#include "mmq/model.hpp"

namespace mmq {

enum class StrategyKind { GreedyProxy, GreedyExact, Asymptotic, ConstantOffsets };

/// Quoting policy bound to a spec. The referenced solution/grid/limits must
/// outlive the simulation.
struct Strategy {
    StrategyKind kind = StrategyKind::GreedyProxy;
    const RiccatiSolution* solution = nullptr;
    const ThetaGrid* theta_grid = nullptr;
    const AsymptoticLimits* limits = nullptr;
    std::vector<std::pair<double, double>> offsets;  // per-asset {bid, ask}

    static Strategy greedy_proxy(const RiccatiSolution& sol);
    static Strategy greedy_exact(const ThetaGrid& grid);
    static Strategy asymptotic(const AsymptoticLimits& limits);
    static Strategy constant(std::vector<std::pair<double, double>> per_asset);
};

struct Trade {
    double time = 0.0;
    int asset = 0;
    int tier = 0;
    char side = 'b';
    double size = 0.0;
    double offset = 0.0;
    double ref_price = 0.0;   // reference price at execution
    double cash_delta = 0.0;  // offset*size - cost -/+ ref_price*size
};

struct PathSample {
    double time = 0.0;
    Vec inventory;
    double cash = 0.0;
};

struct PathResult {
    std::vector<Trade> trades;
    double cash_T = 0.0;
    Vec q_T, s_T;
    double risk_integral = 0.0;  // integral of q' Sigma q dt (exact, q piecewise constant)
    long long majorant_violations = 0;
    std::vector<PathSample> samples;  // filled when SimOptions::record_path
};

struct SimOptions {
    double step_hint = -1.0;        // quote / majorant grid step; <= 0 selects horizon/2000
    double majorant_safety = 1.5;
    int threads = 0;
    bool record_path = false;
};

/// Event-driven simulation of the quoting system: correlated Gaussian price
/// increments with drift (Cholesky factor of Sigma), marked point-process
/// executions thinned against Lambda(delta) per (asset, tier, side, size
/// atom) with indicator gating at the risk limits, cash updated with fixed
/// costs. Identical (spec, strategy, seed) give bit-identical paths for any
/// thread count.
std::vector<PathResult> simulate(const CheckedSpec& spec, const Strategy& strategy,
                                 long long n_paths, std::uint64_t seed,
                                 const SimOptions& opts = {});

struct ObjectiveEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long long n = 0;
};

/// Model A: mean of -exp(-gamma (X_T + q_T' S_T)).
/// Model B: mean of X_T + q_T' S_T - (gamma/2) * risk integral.
ObjectiveEstimate evaluate_objective(const std::vector<PathResult>& results,
                                     const CheckedSpec& spec);

/// Trade log of one path as CSV.
void export_trades_csv(const std::vector<PathResult>& results, long long path_index,
                       std::ostream& out);

} // namespace mmq
