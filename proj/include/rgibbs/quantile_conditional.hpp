#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "order_stats.hpp"
#include "orderstat_engine.hpp"
#include "rng.hpp"

namespace rgibbs {

/// Observed empirical quantiles q_j = Q(X, p_j) of a sample of size N.
struct QuantileConstraints {
    std::size_t n = 0;
    std::vector<double> probs;
    std::vector<double> values;
    std::vector<QuantileIndex> index;  // filled by validate()

    QuantileConstraints() = default;
    QuantileConstraints(std::size_t n_, std::vector<double> p, std::vector<double> q)
        : n(n_), probs(std::move(p)), values(std::move(q)) {
        validate();
    }

    void validate() {
        if (probs.empty()) throw config_error("quantile constraints: need at least one quantile");
        if (probs.size() != values.size()) throw config_error("quantile constraints: probs and values differ in length");
        if (n < 2) throw config_error("quantile constraints: N must be >= 2");
        const double min_gap = 2.0 / (static_cast<double>(n) + 1.0);
        index.clear();
        for (std::size_t j = 0; j < probs.size(); ++j) {
            if (!(probs[j] > 0.0 && probs[j] < 1.0)) throw config_error("quantile constraints: p must lie in (0, 1)");
            if (!std::isfinite(values[j])) throw config_error("quantile constraints: q must be finite");
            if (j > 0) {
                if (!(probs[j] > probs[j - 1])) throw config_error("quantile constraints: p must be strictly increasing");
                if (!(values[j] > values[j - 1])) throw config_error("quantile constraints: q must be strictly increasing");
                if (probs[j] - probs[j - 1] < min_gap - 1e-12) {
                    throw config_error("quantile constraints: p_" + std::to_string(j + 1) + " - p_" + std::to_string(j) +
                                       " is below 2/(N+1)");
                }
            }
            index.push_back(quantile_index(probs[j], n));
        }
        const auto r = ranks();
        for (std::size_t k = 1; k < r.size(); ++k) {
            if (r[k] <= r[k - 1]) throw config_error("quantile constraints: two quantiles share an order statistic");
        }
        if (r.back() > n) throw config_error("quantile constraints: order statistic beyond N");
    }

    [[nodiscard]] std::size_t size() const noexcept { return probs.size(); }

    /// Determining ranks: i_j for every j, plus i_j + 1 for interpolated j.
    [[nodiscard]] std::vector<std::size_t> ranks() const {
        std::vector<std::size_t> r;
        for (const auto& qi : index) {
            r.push_back(qi.i);
            if (!qi.deterministic()) r.push_back(qi.i + 1);
        }
        return r;
    }

    [[nodiscard]] std::size_t interpolated_count() const {
        return static_cast<std::size_t>(
            std::count_if(index.begin(), index.end(), [](const QuantileIndex& q) { return !q.deterministic(); }));
    }
};

struct QuantileAudit {
    double max_residual = 0.0;  // max_j |Q(X, p_j) - q_j| / max(1, |q_j|)
    std::size_t misplaced = 0;

    [[nodiscard]] bool ok(double tol = 1e-9) const noexcept { return max_residual < tol && misplaced == 0; }
};

class QuantileState {
public:
    QuantileState() = default;

    explicit QuantileState(QuantileConstraints c) : c_(std::move(c)) {
        std::vector<AffineValue> maps;
        std::vector<FreeCoordinate> free;
        for (std::size_t j = 0; j < c_.size(); ++j) {
            const QuantileIndex& qi = c_.index[j];
            const double q = c_.values[j];
            if (qi.deterministic()) {
                maps.push_back(AffineValue{q, {}});
                continue;
            }
            const std::size_t f = free.size();
            free.push_back(FreeCoordinate{qi.i, 1.0 - qi.g});
            maps.push_back(AffineValue{0.0, {{f, 1.0}}});
            maps.push_back(AffineValue{q / qi.g, {{f, -(1.0 - qi.g) / qi.g}}});
        }
        engine_ = PinnedOrderStats(c_.n, c_.ranks(), std::move(maps), std::move(free));
    }

    [[nodiscard]] const QuantileConstraints& constraints() const noexcept { return c_; }
    [[nodiscard]] PinnedOrderStats& engine() noexcept { return engine_; }
    [[nodiscard]] const PinnedOrderStats& engine() const noexcept { return engine_; }
    [[nodiscard]] std::span<const double> x() const noexcept { return engine_.x(); }

    [[nodiscard]] QuantileAudit audit() const {
        QuantileAudit a;
        const std::vector<double> s = engine_.sorted_x();
        for (std::size_t j = 0; j < c_.size(); ++j) {
            const double q = c_.values[j];
            const double r = std::abs(empirical_quantile_sorted(s, c_.probs[j]) - q) / std::max(1.0, std::abs(q));
            a.max_residual = std::max(a.max_residual, std::isnan(r) ? inf : r);
        }
        a.misplaced = engine_.misplaced();
        return a;
    }

private:
    QuantileConstraints c_;
    PinnedOrderStats engine_;
};

/// Start from the observed quantiles: deterministic ones are pinned at q_j,
/// interpolated ones straddle q_j at distance eps_j (one order-statistic
/// standard deviation, shrunk to stay between neighbouring quantiles), and
/// the remaining coordinates are drawn in their zones from `theta0`.
template <ContinuousFamily D>
QuantileState init_quantile_state(const QuantileConstraints& c, const D& theta0, Rng& rng) {
    QuantileState st(c);
    const Interval sup = theta0.support();
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (!(theta0.pdf(c.values[j]) > 0.0)) {
            throw infeasible_error("initialization: quantile q_" + std::to_string(j + 1) + " = " +
                                   std::to_string(c.values[j]) + " has zero density under the initial parameters");
        }
    }
    std::vector<double> free;
    for (std::size_t j = 0; j < c.size(); ++j) {
        const QuantileIndex& qi = c.index[j];
        if (qi.deterministic()) continue;
        const double q = c.values[j];
        double eps = std::sqrt(detail::orderstat_variance_or_nan(theta0, qi.i, c.n));
        if (!std::isfinite(eps)) eps = 1.0;
        const double below = j > 0 ? q - c.values[j - 1] : q - sup.lo;
        const double above = j + 1 < c.size() ? c.values[j + 1] - q : sup.hi - q;
        eps = std::min(eps, 0.45 * below / qi.g);
        eps = std::min(eps, 0.45 * above / (1.0 - qi.g));
        free.push_back(q - eps * qi.g);
        st.engine().set_fallback_variance(eps * eps);
    }
    st.engine().set_free(free);
    if (!(st.engine().log_density(theta0, free) > -inf)) {
        throw infeasible_error("initialization: the constrained order statistics have zero density under the "
                               "initial parameters");
    }
    st.engine().refill(theta0, rng);
    return st;
}

/// Unnormalised log density of the free order statistics X_(i_j), j
/// interpolated, given every quantile constraint.
template <ContinuousFamily D>
double conditional_orderstat_logdensity(const QuantileState& st, const D& theta, std::span<const double> free) {
    return st.engine().log_density(theta, free);
}

template <ContinuousFamily D>
std::size_t mh_update_orderstats(QuantileState& st, const D& theta, Rng& rng, const ScaleAdapter* adapt = nullptr) {
    return st.engine().mh_sweep(theta, rng, adapt);
}

template <ContinuousFamily D>
void refill_free_coordinates(QuantileState& st, const D& theta, Rng& rng) {
    st.engine().refill(theta, rng);
}

}  // namespace rgibbs
