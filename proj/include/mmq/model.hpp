#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmq/linalg.hpp"

namespace mmq {

enum class Objective { ModelA, ModelB };

/// Execution intensity Lambda(delta): arrival rate of fills as a function of
/// the quote offset. Exponential curves carry exact closed forms downstream;
/// tabulated curves use monotone cubic interpolation between samples and are
/// extrapolated as exponentials fitted to the boundary pairs, which keeps
/// Lambda strictly decreasing, positive and vanishing at +infinity.
class IntensityCurve {
public:
    static IntensityCurve exponential(double scale, double decay);
    static IntensityCurve tabulated(Vec deltas, Vec values);

    bool is_exponential() const { return exponential_; }
    double scale() const { return scale_; }
    double decay() const { return decay_; }
    const Vec& knots() const { return xs_; }
    const Vec& values() const { return ys_; }

    double operator()(double delta) const;

    /// Lambda^{-1}(target), target > 0. Closed form for exponential curves,
    /// bisection otherwise.
    double inverse(double target) const;

    bool operator==(const IntensityCurve& o) const = default;

private:
    IntensityCurve() = default;

    bool exponential_ = true;
    double scale_ = 1.0;
    double decay_ = 1.0;
    // Tabulated form. Fritsch-Carlson slopes precomputed at load.
    Vec xs_, ys_, slopes_;
    double left_rate_ = 1.0, right_rate_ = 1.0;
};

/// Finite discrete trade-size distribution.
struct SizeDist {
    struct Atom {
        double size = 1.0;
        double weight = 1.0;
        bool operator==(const Atom&) const = default;
    };
    std::vector<Atom> atoms;

    static SizeDist dirac(double size) { return SizeDist{{Atom{size, 1.0}}}; }
    bool operator==(const SizeDist&) const = default;
};

struct TierSide {
    IntensityCurve intensity = IntensityCurve::exponential(1.0, 1.0);
    SizeDist sizes = SizeDist::dirac(1.0);
    double fixed_cost = 0.0;
    bool operator==(const TierSide&) const = default;
};

struct TierSpec {
    TierSide bid, ask;
    bool operator==(const TierSpec&) const = default;
};

struct AssetSpec {
    std::string name;
    double sigma = 0.0;   // volatility, price / sqrt(time)
    double z = 1.0;       // base trade size (lattice unit)
    double Q = 0.0;       // risk limit, multiple of z
    double s0 = 100.0;    // initial reference price
    // Base-model intensity curves; ignored when explicit tiers are given.
    std::optional<IntensityCurve> bid_intensity, ask_intensity;
};

/// Raw market specification as assembled by a caller or parsed from JSON.
/// `validate` turns it into a CheckedSpec.
struct MarketSpec {
    std::vector<AssetSpec> assets;
    Mat correlation;
    Vec drift;                       // empty => zero drift
    double gamma = 0.0;
    Objective objective = Objective::ModelB;
    double horizon = 0.0;
    // Per-asset tier lists. Empty => base model built from the asset curves.
    std::vector<std::vector<TierSpec>> tiers;
    std::optional<double> delta_floor;
    Vec q0;                          // empty => flat start
};

/// Immutable validated specification. Base-model inputs are canonicalized to
/// the general form (one tier, Dirac sizes, zero costs) so every consumer has
/// a single code path.
class CheckedSpec {
public:
    int d() const { return static_cast<int>(assets_.size()); }
    const std::vector<AssetSpec>& assets() const { return assets_; }
    const Mat& correlation() const { return correlation_; }
    const Mat& covariance() const { return sigma_mat_; }
    const Vec& drift() const { return drift_; }
    double gamma() const { return gamma_; }
    Objective objective() const { return objective_; }
    double horizon() const { return horizon_; }
    const std::vector<std::vector<TierSpec>>& tiers() const { return tiers_; }
    const std::vector<TierSpec>& tiers(int asset) const { return tiers_[asset]; }
    const std::optional<double>& delta_floor() const { return floor_; }
    const Vec& q0() const { return q0_; }
    bool has_drift() const;

    /// Round-trips to the canonical MarketSpec (general form).
    MarketSpec to_market_spec() const;

private:
    friend CheckedSpec validate(const MarketSpec& spec);

    std::vector<AssetSpec> assets_;
    Mat correlation_, sigma_mat_;
    Vec drift_, q0_;
    double gamma_ = 0.0;
    Objective objective_ = Objective::ModelB;
    double horizon_ = 0.0;
    std::vector<std::vector<TierSpec>> tiers_;
    std::optional<double> floor_;
};

/// Validates every model invariant and returns the immutable canonical spec.
/// Throws ValidationError with a message naming the offending field.
CheckedSpec validate(const MarketSpec& spec);

/// xi = gamma for Model A (CARA), 0 for Model B (risk-adjusted expectation).
double effective_xi(const CheckedSpec& spec);

/// JSON spec-file support (schema documented in the README).
MarketSpec parse_market_spec(const std::string& json_text);
MarketSpec load_market_spec(const std::string& path);
std::string to_json(const MarketSpec& spec);

} // namespace mmq
