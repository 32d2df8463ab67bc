#pragma once

#include <iosfwd>

#include "mmq/closedform.hpp"
#include "mmq/exact.hpp"
#include "mmq/model.hpp"

namespace mmq {

/// One side of a quote. A withdrawn side means the risk limit gates the
/// fill (q +/- z would leave [-Q, Q]); it is distinct from any finite offset.
struct Quote {
    double offset = 0.0;
    double price = 0.0;
    bool withdrawn = false;
};

struct QuoteEntry {
    int asset = 0;
    int tier = 0;
    double size = 1.0;
    Quote bid, ask;
};

using QuoteSet = std::vector<QuoteEntry>;

/// Optimal-quote map delta*(p): Lambda^{-1}(xi z H - H') for xi > 0,
/// Lambda^{-1}(-H') for xi = 0, clamped at -floor when a floor is set.
/// Exponential curves use the closed forms p + log(1 + xi z/k)/(xi z) and
/// p + 1/k.
double delta_star(const IntensityCurve& curve, double xi, double z, double p,
                  std::optional<double> floor = std::nullopt);

/// Any point source of theta values usable by the greedy map: the exact grid,
/// an MC-corrected proxy, a custom heuristic.
class ThetaSource {
public:
    virtual ~ThetaSource() = default;
    virtual double theta(double t, const Vec& q) const = 0;
};

class GridTheta final : public ThetaSource {
public:
    explicit GridTheta(const ThetaGrid& grid) : grid_(&grid) {}
    double theta(double t, const Vec& q) const override { return grid_->query(t, q); }

private:
    const ThetaGrid* grid_;
};

class ProxyTheta final : public ThetaSource {
public:
    explicit ProxyTheta(const RiccatiSolution& sol) : sol_(&sol) {}
    double theta(double t, const Vec& q) const override { return sol_->theta_check(t, q); }

private:
    const RiccatiSolution* sol_;
};

/// Greedy quotes from finite differences of a theta source:
/// p = (theta(t,q) - theta(t, q +/- z e_i) + c) / z, then delta*(p).
QuoteSet greedy_quotes(const ThetaSource& source, const CheckedSpec& spec, double t, const Vec& q);

/// Greedy quotes from the quadratic proxy, with the difference quotient
/// reduced algebraically: p = +/-2 q'A(t)e_i + z A_ii(t) +/- B_i(t) + c/z.
QuoteSet greedy_quotes(const RiccatiSolution& sol, const CheckedSpec& spec, double t, const Vec& q);

/// Stationary closed-form quotes from the T -> infinity limits. Throws
/// NumericalError when the image condition fails (no constant asymptotic
/// approximation of the quotes exists).
QuoteSet asymptotic_quotes(const AsymptoticLimits& limits, const CheckedSpec& spec, const Vec& q);

struct SpreadSkew {
    double half_spread = 0.0;
    double skew = 0.0;   // (delta_ask - delta_bid) / 2, linear in q
};

/// Half-spread / skew decomposition of the asymptotic quotes. Defined for the
/// symmetric exponential configuration (one tier per asset, identical bid and
/// ask curves, Dirac sizes, zero costs, zero drift); throws ValidationError
/// otherwise.
std::vector<SpreadSkew> spread_skew(const AsymptoticLimits& limits, const CheckedSpec& spec,
                                    const Vec& q);

/// CSV dump: t, asset, tier, size, side, offset, price, gated.
void export_quotes_csv(const QuoteSet& quotes, double t, std::ostream& out);

} // namespace mmq
