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

enum class MedIqrCase { n4_plus1, n4_plus3, n4, n4_plus2 };

inline MedIqrCase mediqr_case(std::size_t n) {
    switch (n % 4) {
        case 1: return MedIqrCase::n4_plus1;
        case 3: return MedIqrCase::n4_plus3;
        case 0: return MedIqrCase::n4;
        default: return MedIqrCase::n4_plus2;
    }
}

inline const char* to_string(MedIqrCase c) {
    switch (c) {
        case MedIqrCase::n4_plus1: return "N=4n+1";
        case MedIqrCase::n4_plus3: return "N=4n+3";
        case MedIqrCase::n4: return "N=4n";
        default: return "N=4n+2";
    }
}

/// Which order statistics carry the quartiles for a given N, which of them
/// are sampled and which follow from the median and IQR.
struct MedIqrLayout {
    MedIqrCase kind = MedIqrCase::n4_plus1;
    QuantileIndex q1, q2, q3;
    std::vector<std::size_t> ranks;          // all determining ranks
    std::vector<std::size_t> free_ranks;     // sampled by Metropolis
    std::vector<std::size_t> derived_ranks;  // reconstructed or fixed
};

/// Smallest usable N is 5; N = 6 is rejected because its quartile and
/// median order statistics overlap.
inline MedIqrLayout mediqr_free_variables(std::size_t n) {
    if (n < 5) throw config_error("median/IQR constraints need N >= 5, got " + std::to_string(n));
    MedIqrLayout L;
    L.kind = mediqr_case(n);
    L.q1 = quantile_index(0.25, n);
    L.q2 = quantile_index(0.5, n);
    L.q3 = quantile_index(0.75, n);
    const auto push = [&](const QuantileIndex& q) {
        L.ranks.push_back(q.i);
        if (!q.deterministic()) L.ranks.push_back(q.i + 1);
    };
    push(L.q1);
    push(L.q2);
    push(L.q3);
    for (std::size_t k = 1; k < L.ranks.size(); ++k) {
        if (L.ranks[k] <= L.ranks[k - 1]) {
            throw config_error("median/IQR constraints: N = " + std::to_string(n) +
                               " is too small, the quartile order statistics overlap");
        }
    }
    L.free_ranks.push_back(L.q1.i);
    if (!L.q2.deterministic()) L.free_ranks.push_back(L.q2.i);
    if (!L.q3.deterministic()) {
        L.free_ranks.push_back(L.q3.i);
        L.free_ranks.push_back(L.q3.i + 1);
    }
    for (std::size_t r : L.ranks) {
        if (std::find(L.free_ranks.begin(), L.free_ranks.end(), r) == L.free_ranks.end()) L.derived_ranks.push_back(r);
    }
    return L;
}

struct MedIqrConstraints {
    double m = 0.0;
    double iqr = 1.0;
    std::size_t n = 5;

    MedIqrConstraints() = default;
    MedIqrConstraints(double m_, double iqr_, std::size_t n_) : m(m_), iqr(iqr_), n(n_) { validate(); }

    void validate() const {
        if (!std::isfinite(m)) throw config_error("median/IQR constraints: m must be finite");
        if (!(iqr > 0.0) || !std::isfinite(iqr)) throw config_error("median/IQR constraints: IQR must be > 0");
        (void)mediqr_free_variables(n);
    }
    [[nodiscard]] MedIqrCase kind() const { return mediqr_case(n); }
};

struct MedIqrAudit {
    double median_residual = 0.0;
    double iqr_residual = 0.0;
    std::size_t misplaced = 0;

    [[nodiscard]] bool ok(double tol = 1e-9) const noexcept {
        return median_residual < tol && iqr_residual < tol && misplaced == 0;
    }
};

class MedIqrState {
public:
    MedIqrState() = default;

    explicit MedIqrState(const MedIqrConstraints& c) : c_(c), layout_(mediqr_free_variables(c.n)) {
        const QuantileIndex& q1 = layout_.q1;
        const QuantileIndex& q2 = layout_.q2;
        const QuantileIndex& q3 = layout_.q3;
        std::vector<AffineValue> maps;
        std::vector<FreeCoordinate> free;

        const std::size_t a = free.size();
        free.push_back(FreeCoordinate{q1.i, 1.0 - q1.g});
        maps.push_back(AffineValue{0.0, {{a, 1.0}}});
        if (!q1.deterministic()) {
            // Q1 = Q3 - iqr gives the partner of X_(i1); Q3 is spelled out
            // below once its free coordinates exist, so reserve a slot.
            maps.push_back(AffineValue{});
        }
        const std::size_t q1_partner = maps.size() - 1;

        if (q2.deterministic()) {
            maps.push_back(AffineValue{c.m, {}});
        } else {
            const std::size_t e = free.size();
            free.push_back(FreeCoordinate{q2.i, 1.0 - q2.g});
            maps.push_back(AffineValue{0.0, {{e, 1.0}}});
            maps.push_back(AffineValue{c.m / q2.g, {{e, -(1.0 - q2.g) / q2.g}}});
        }

        if (q3.deterministic()) {
            maps.push_back(AffineValue{c.iqr, {{a, 1.0}}});
        } else {
            const std::size_t b = free.size();
            free.push_back(FreeCoordinate{q3.i, 1.0 - q3.g});
            free.push_back(FreeCoordinate{q3.i + 1, q3.g});
            maps.push_back(AffineValue{0.0, {{b, 1.0}}});
            maps.push_back(AffineValue{0.0, {{b + 1, 1.0}}});
            if (q1.deterministic()) throw parameter_error("median/IQR layout: mixed quartile types");
            maps[q1_partner] = AffineValue{-c.iqr / q1.g,
                                           {{b, (1.0 - q3.g) / q1.g}, {b + 1, q3.g / q1.g}, {a, -(1.0 - q1.g) / q1.g}}};
        }
        engine_ = PinnedOrderStats(c.n, layout_.ranks, std::move(maps), std::move(free));
    }

    [[nodiscard]] const MedIqrConstraints& constraints() const noexcept { return c_; }
    [[nodiscard]] const MedIqrLayout& layout() const noexcept { return layout_; }
    [[nodiscard]] PinnedOrderStats& engine() noexcept { return engine_; }
    [[nodiscard]] const PinnedOrderStats& engine() const noexcept { return engine_; }
    [[nodiscard]] std::span<const double> x() const noexcept { return engine_.x(); }

    [[nodiscard]] MedIqrAudit audit() const {
        MedIqrAudit a;
        const std::vector<double> s = engine_.sorted_x();
        const double med = empirical_quantile_sorted(s, 0.5);
        const double range = empirical_quantile_sorted(s, 0.75) - empirical_quantile_sorted(s, 0.25);
        a.median_residual = std::abs(med - c_.m) / std::max(1.0, std::abs(c_.m));
        a.iqr_residual = std::abs(range - c_.iqr) / std::max(1.0, c_.iqr);
        if (std::isnan(a.median_residual)) a.median_residual = inf;
        if (std::isnan(a.iqr_residual)) a.iqr_residual = inf;
        a.misplaced = engine_.misplaced();
        return a;
    }

private:
    MedIqrConstraints c_;
    MedIqrLayout layout_;
    PinnedOrderStats engine_;
};

namespace detail {

/// Zone contents of the deterministic ladders: below the lowest pinned value
/// at `pad` beneath it, above the highest at `pad` over it, and interior
/// zones at their midpoint.
inline std::vector<double> ladder_zone_values(const PinnedOrderStats& eng, double pad) {
    std::vector<double> out;
    const auto zs = eng.zones();
    const std::vector<double> pins = eng.pinned();
    for (std::size_t k = 0; k < zs.size(); ++k) {
        double v;
        if (k == 0) {
            v = pins.front() - pad;
        } else if (k + 1 == zs.size()) {
            v = pins.back() + pad;
        } else {
            v = 0.5 * (zs[k].first.lo + zs[k].first.hi);
        }
        out.insert(out.end(), zs[k].second, v);
    }
    return out;
}

}  // namespace detail

/// Initial state with median m and IQR i. Linear mode rescales a sample from
/// `theta0`; deterministic mode builds the ladder q1 = m - i/2, q3 = m + i/2
/// with outer zones at m -/+ 3i/4 and inner ones at m -/+ i/4.
template <ContinuousFamily D>
MedIqrState init_mediqr_state(const MedIqrConstraints& c, const D& theta0, Rng& rng,
                              InitMode mode = InitMode::automatic) {
    c.validate();
    if (mode == InitMode::automatic) {
        const Interval sup = theta0.support();
        mode = (sup.lo == -inf && sup.hi == inf) ? InitMode::linear : InitMode::deterministic;
    }
    MedIqrState st(c);
    PinnedOrderStats& eng = st.engine();
    const MedIqrLayout& L = st.layout();
    if (mode == InitMode::linear) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            std::vector<double> z(c.n);
            for (double& v : z) v = theta0.sample(rng);
            std::sort(z.begin(), z.end());
            const double zi = empirical_quantile_sorted(z, 0.75) - empirical_quantile_sorted(z, 0.25);
            if (!(zi > 0.0)) continue;
            const double zm = empirical_quantile_sorted(z, 0.5);
            for (double& v : z) v = (v - zm) * c.iqr / zi + c.m;
            std::vector<double> zone_values;
            for (std::size_t pos = 0; pos < c.n; ++pos) {
                if (std::find(L.ranks.begin(), L.ranks.end(), pos + 1) == L.ranks.end()) zone_values.push_back(z[pos]);
            }
            eng.set_state(eng.extract_free(z), zone_values);
            if (eng.misplaced() != 0) continue;
            detail::require_support(theta0, eng.x(), "linear initialization (use deterministic mode)");
            return st;
        }
        throw infeasible_error("linear initialization failed to produce distinct order statistics");
    }

    const double q1 = c.m - 0.5 * c.iqr;
    const double q3 = c.m + 0.5 * c.iqr;
    const double eps = c.iqr / 8.0;
    std::vector<double> free;
    free.push_back(q1 - eps * L.q1.g);
    if (!L.q2.deterministic()) free.push_back(c.m - eps * L.q2.g);
    if (!L.q3.deterministic()) {
        free.push_back(q3 - eps * L.q3.g);
        free.push_back(q3 + eps * (1.0 - L.q3.g));
    }
    eng.set_free(free);
    const std::vector<double> zone_values = detail::ladder_zone_values(eng, 0.25 * c.iqr);
    eng.set_state(free, zone_values);
    detail::require_support(theta0, eng.x(), "deterministic initialization");
    return st;
}

template <ContinuousFamily D>
double conditional_mediqr_logdensity(const MedIqrState& st, const D& theta, std::span<const double> free) {
    return st.engine().log_density(theta, free);
}

template <ContinuousFamily D>
std::size_t mh_update_mediqr(MedIqrState& st, const D& theta, Rng& rng, const ScaleAdapter* adapt = nullptr) {
    return st.engine().mh_sweep(theta, rng, adapt);
}

template <ContinuousFamily D>
void refill_free_coordinates_mediqr(MedIqrState& st, const D& theta, Rng& rng) {
    st.engine().refill(theta, rng);
}

}  // namespace rgibbs
