#include "mmq/model.hpp"

#include <cmath>

#include "mmq/errors.hpp"

namespace mmq {

IntensityCurve IntensityCurve::exponential(double scale, double decay) {
    if (!(scale > 0.0) || !(decay > 0.0))
        throw ValidationError("intensity: exponential curve requires scale > 0 and decay > 0");
    IntensityCurve c;
    c.exponential_ = true;
    c.scale_ = scale;
    c.decay_ = decay;
    return c;
}

IntensityCurve IntensityCurve::tabulated(Vec deltas, Vec values) {
    const size_t n = deltas.size();
    if (n < 2 || values.size() != n)
        throw ValidationError("intensity: tabulated curve needs >= 2 matching samples");
    for (size_t i = 0; i < n; ++i) {
        if (!(values[i] > 0.0)) throw ValidationError("intensity: tabulated values must be positive");
        if (i > 0) {
            if (!(deltas[i] > deltas[i - 1]))
                throw ValidationError("intensity: tabulated deltas must be strictly increasing");
            if (!(values[i] < values[i - 1]))
                throw ValidationError("intensity: tabulated curve must be strictly decreasing");
        }
    }

    IntensityCurve c;
    c.exponential_ = false;
    c.xs_ = std::move(deltas);
    c.ys_ = std::move(values);

    // Fritsch-Carlson monotone cubic slopes. All secants are negative, so the
    // standard limiter keeps the interpolant strictly decreasing.
    std::vector<double> h(n - 1), sec(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        h[i] = c.xs_[i + 1] - c.xs_[i];
        sec[i] = (c.ys_[i + 1] - c.ys_[i]) / h[i];
    }
    c.slopes_.assign(n, 0.0);
    c.slopes_[0] = sec[0];
    c.slopes_[n - 1] = sec[n - 2];
    for (size_t i = 1; i + 1 < n; ++i) {
        // Harmonic mean of secants, weighted per Fritsch-Butland.
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        c.slopes_[i] = (w1 + w2) / (w1 / sec[i - 1] + w2 / sec[i]);
    }

    // Exponential extrapolation rates fitted to the boundary sample pairs.
    c.left_rate_ = std::log(c.ys_[0] / c.ys_[1]) / (c.xs_[1] - c.xs_[0]);
    c.right_rate_ = std::log(c.ys_[n - 2] / c.ys_[n - 1]) / (c.xs_[n - 1] - c.xs_[n - 2]);
    return c;
}

double IntensityCurve::operator()(double delta) const {
    if (exponential_) return scale_ * std::exp(-decay_ * delta);
    const size_t n = xs_.size();
    if (delta <= xs_.front()) return ys_.front() * std::exp(-left_rate_ * (delta - xs_.front()));
    if (delta >= xs_.back()) return ys_.back() * std::exp(-right_rate_ * (delta - xs_.back()));
    // Hermite cubic on the bracketing interval.
    size_t hi = 1;
    while (xs_[hi] < delta) ++hi;
    const size_t lo = hi - 1;
    const double h = xs_[hi] - xs_[lo];
    const double t = (delta - xs_[lo]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return ys_[lo] * (2 * t3 - 3 * t2 + 1) + h * slopes_[lo] * (t3 - 2 * t2 + t) +
           ys_[hi] * (-2 * t3 + 3 * t2) + h * slopes_[hi] * (t3 - t2);
}

double IntensityCurve::inverse(double target) const {
    if (!(target > 0.0)) throw NumericalError("intensity inverse: target must be positive");
    if (exponential_) return -std::log(target / scale_) / decay_;

    // Bracket, growing outward; the exponential tails make Lambda onto (0, inf).
    double lo = xs_.front(), hi = xs_.back();
    double span = hi - lo;
    int guard = 0;
    while ((*this)(lo) < target) {
        lo -= span;
        span *= 2.0;
        if (++guard > 200) throw NumericalError("intensity inverse: failed to bracket below");
    }
    span = xs_.back() - xs_.front();
    guard = 0;
    while ((*this)(hi) > target) {
        hi += span;
        span *= 2.0;
        if (++guard > 200) throw NumericalError("intensity inverse: failed to bracket above");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + std::fabs(lo) + std::fabs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((*this)(mid) >= target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

bool CheckedSpec::has_drift() const {
    for (double m : drift_)
        if (m != 0.0) return true;
    return false;
}

MarketSpec CheckedSpec::to_market_spec() const {
    MarketSpec raw;
    raw.assets = assets_;
    for (auto& a : raw.assets) {
        a.bid_intensity.reset();
        a.ask_intensity.reset();
    }
    raw.correlation = correlation_;
    raw.drift = drift_;
    raw.gamma = gamma_;
    raw.objective = objective_;
    raw.horizon = horizon_;
    raw.tiers = tiers_;
    raw.delta_floor = floor_;
    raw.q0 = q0_;
    return raw;
}

namespace {

void check_size_dist(const SizeDist& dist, const std::string& where) {
    if (dist.atoms.empty()) throw ValidationError(where + ": size distribution has no atoms");
    double total = 0.0;
    for (const auto& a : dist.atoms) {
        if (!(a.size > 0.0)) throw ValidationError(where + ": size atom must be positive");
        if (!(a.weight > 0.0)) throw ValidationError(where + ": size weight must be positive");
        total += a.weight;
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw ValidationError(where + ": size weights sum to " + std::to_string(total) +
                              ", expected 1");
}

void check_tier_side(const TierSide& side, const std::string& where) {
    check_size_dist(side.sizes, where);
    if (!(side.fixed_cost >= 0.0) || !std::isfinite(side.fixed_cost))
        throw ValidationError(where + ": fixed cost must be finite and non-negative");
}

} // namespace

CheckedSpec validate(const MarketSpec& spec) {
    const int d = static_cast<int>(spec.assets.size());
    if (d == 0) throw ValidationError("spec: no assets");

    if (spec.correlation.rows() != d || spec.correlation.cols() != d)
        throw ValidationError("spec: correlation matrix dimension mismatch");
    for (int i = 0; i < d; ++i) {
        if (std::fabs(spec.correlation(i, i) - 1.0) > 1e-12)
            throw ValidationError("spec: correlation diagonal must be 1");
        for (int j = 0; j < d; ++j) {
            if (std::fabs(spec.correlation(i, j)) > 1.0 + 1e-12)
                throw ValidationError("spec: correlation out of range [-1, 1]");
            if (std::fabs(spec.correlation(i, j) - spec.correlation(j, i)) > 1e-12)
                throw ValidationError("spec: correlation matrix must be symmetric");
        }
    }
    {
        SymSpectrum s = sym_eig(spec.correlation);
        const double tol = 1e-10 * std::max(1.0, std::fabs(s.eigenvalues.back()));
        if (s.eigenvalues.front() < -tol)
            throw ValidationError("spec: correlation matrix is not positive semi-definite");
    }

    if (!(spec.gamma >= 0.0) || !std::isfinite(spec.gamma))
        throw ValidationError("spec: gamma must be positive");
    if (spec.gamma == 0.0 && spec.objective == Objective::ModelA)
        throw ValidationError("spec: gamma must be positive in Model A");
    if (!(spec.horizon > 0.0)) throw ValidationError("spec: horizon must be positive");

    if (!spec.tiers.empty() && static_cast<int>(spec.tiers.size()) != d)
        throw ValidationError("spec: tiers must list one entry per asset");
    const bool general = !spec.tiers.empty();
    if (general) {
        for (int i = 0; i < d; ++i)
            if (spec.tiers[i].empty())
                throw ValidationError("asset " + std::to_string(i) + ": empty tier list");
    }
    // The floor is the technical bound of the general model. The canonical
    // image of a base-model spec (one tier, Dirac sizes at z, zero costs) is
    // exempt so that canonicalization round-trips.
    bool base_reduction = true;
    if (general) {
        for (int i = 0; i < d && base_reduction; ++i) {
            if (spec.tiers[i].size() != 1) {
                base_reduction = false;
                break;
            }
            const TierSpec& t = spec.tiers[i].front();
            const SizeDist dirac = SizeDist::dirac(spec.assets[i].z);
            base_reduction = t.bid.sizes == dirac && t.ask.sizes == dirac &&
                             t.bid.fixed_cost == 0.0 && t.ask.fixed_cost == 0.0;
        }
    }
    if (general && !base_reduction && !spec.delta_floor)
        throw ValidationError("spec: delta_floor is required in the general model");
    if (spec.delta_floor && !(*spec.delta_floor > 0.0))
        throw ValidationError("spec: delta_floor must be positive");

    if (!spec.drift.empty() && static_cast<int>(spec.drift.size()) != d)
        throw ValidationError("spec: drift dimension mismatch");
    if (!spec.q0.empty() && static_cast<int>(spec.q0.size()) != d)
        throw ValidationError("spec: q0 dimension mismatch");

    CheckedSpec out;
    out.assets_ = spec.assets;
    out.correlation_ = spec.correlation;
    out.gamma_ = spec.gamma;
    out.objective_ = spec.objective;
    out.horizon_ = spec.horizon;
    out.floor_ = spec.delta_floor;
    out.drift_ = spec.drift.empty() ? Vec(d, 0.0) : spec.drift;
    out.q0_ = spec.q0.empty() ? Vec(d, 0.0) : spec.q0;

    out.sigma_mat_ = Mat(d, d);
    for (int i = 0; i < d; ++i) {
        const AssetSpec& a = spec.assets[i];
        if (!(a.sigma > 0.0)) throw ValidationError("asset " + a.name + ": sigma must be positive");
        if (!(a.z > 0.0)) throw ValidationError("asset " + a.name + ": trade size must be positive");
        if (!(a.Q > 0.0)) throw ValidationError("asset " + a.name + ": risk limit must be positive");
        const double ratio = a.Q / a.z;
        if (std::fabs(ratio - std::round(ratio)) > 1e-9)
            throw ValidationError("asset " + a.name + ": risk limit not a multiple of trade size");
        for (int j = 0; j < d; ++j)
            out.sigma_mat_(i, j) = spec.correlation(i, j) * a.sigma * spec.assets[j].sigma;
    }

    out.tiers_.resize(d);
    for (int i = 0; i < d; ++i) {
        const AssetSpec& a = spec.assets[i];
        const std::string where = "asset " + (a.name.empty() ? std::to_string(i) : a.name);
        if (general) {
            for (const auto& tier : spec.tiers[i]) {
                check_tier_side(tier.bid, where + " bid");
                check_tier_side(tier.ask, where + " ask");
            }
            out.tiers_[i] = spec.tiers[i];
        } else {
            // Canonical base-model tier: asset curves, Dirac size, no cost.
            if (!a.bid_intensity && !a.ask_intensity)
                throw ValidationError(where + ": no intensity curve given");
            TierSpec tier;
            tier.bid.intensity = a.bid_intensity ? *a.bid_intensity : *a.ask_intensity;
            tier.ask.intensity = a.ask_intensity ? *a.ask_intensity : *a.bid_intensity;
            tier.bid.sizes = SizeDist::dirac(a.z);
            tier.ask.sizes = SizeDist::dirac(a.z);
            out.tiers_[i] = {tier};
        }
    }
    // Canonical assets drop the consumed base-model curves.
    for (auto& a : out.assets_) {
        a.bid_intensity.reset();
        a.ask_intensity.reset();
    }
    return out;
}

double effective_xi(const CheckedSpec& spec) {
    return spec.objective() == Objective::ModelA ? spec.gamma() : 0.0;
}

} // namespace mmq
