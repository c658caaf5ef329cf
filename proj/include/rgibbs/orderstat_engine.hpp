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
#include "rng.hpp"

namespace rgibbs {

/// Starting-point construction for the latent engines. `automatic` picks the
/// affine map of a simulated sample when the family has full support and the
/// deterministic ladder otherwise.
enum class InitMode { automatic, linear, deterministic };

namespace detail {

template <ContinuousFamily D>
void require_support(const D& d, std::span<const double> x, const char* what) {
    for (double v : x) {
        if (!(d.pdf(v) > 0.0)) {
            throw infeasible_error(std::string(what) + ": value " + std::to_string(v) +
                                   " lies outside the support of the initial parameters");
        }
    }
}

}  // namespace detail

/// A pinned order statistic expressed as offset + sum(coef * free[k]).
struct AffineValue {
    double offset = 0.0;
    std::vector<std::pair<std::size_t, double>> terms;

    [[nodiscard]] double eval(std::span<const double> free) const {
        double v = offset;
        for (const auto& [k, c] : terms) v += c * free[k];
        return v;
    }
};

/// One free coordinate of the change of variables: the rank it sits at and
/// its weight in the quantile it enters (proposal variance is divided by it).
struct FreeCoordinate {
    std::size_t rank = 1;
    double weight = 1.0;
};

/// Acceptance bookkeeping for a group of Metropolis steps.
struct AcceptanceCounter {
    std::size_t proposed = 0;
    std::size_t accepted = 0;

    [[nodiscard]] double rate() const noexcept {
        return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
    }
    void add(bool ok) noexcept {
        ++proposed;
        accepted += ok ? 1 : 0;
    }
};

/// Robbins-Monro tuning of log proposal scales toward a target acceptance.
struct ScaleAdapter {
    double target = 0.44;
    std::size_t steps = 0;

    [[nodiscard]] double gain() const noexcept { return 1.0 / std::pow(static_cast<double>(steps) + 10.0, 0.6); }
    void update(double& log_scale, bool accepted) const noexcept {
        log_scale += gain() * ((accepted ? 1.0 : 0.0) - target);
        log_scale = std::clamp(log_scale, -30.0, 30.0);
    }
};

/// Latent sample whose order statistics at a fixed set of ranks are affine
/// functions of a few free coordinates; every other coordinate lives in the
/// gap ("zone") between two consecutive pinned order statistics.
///
/// Storage keeps X partitioned: position r-1 holds the pinned value of rank r
/// and the positions between two pinned ranks hold that zone's coordinates.
class PinnedOrderStats {
public:
    PinnedOrderStats() = default;

    PinnedOrderStats(std::size_t n, std::vector<std::size_t> ranks, std::vector<AffineValue> maps,
                     std::vector<FreeCoordinate> free_coords)
        : spec_{n, std::move(ranks)}, maps_(std::move(maps)), free_coords_(std::move(free_coords)) {
        spec_.validate();
        if (maps_.size() != spec_.indices.size()) throw parameter_error("PinnedOrderStats: one map per rank");
        x_.assign(n, 0.0);
        free_.assign(free_coords_.size(), 0.0);
        log_scale_.assign(free_coords_.size(), 0.0);
        accept_.assign(free_coords_.size(), AcceptanceCounter{});
    }

    [[nodiscard]] std::size_t size() const noexcept { return spec_.n; }
    [[nodiscard]] const OrderStatSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::span<const double> x() const noexcept { return x_; }
    [[nodiscard]] std::span<const double> free_values() const noexcept { return free_; }
    [[nodiscard]] const std::vector<FreeCoordinate>& free_coordinates() const noexcept { return free_coords_; }
    [[nodiscard]] const std::vector<AcceptanceCounter>& acceptance() const noexcept { return accept_; }
    [[nodiscard]] std::span<const double> log_scales() const noexcept { return log_scale_; }

    [[nodiscard]] std::vector<double> pinned_from(std::span<const double> free) const {
        std::vector<double> v(maps_.size());
        for (std::size_t k = 0; k < maps_.size(); ++k) v[k] = maps_[k].eval(free);
        return v;
    }
    [[nodiscard]] std::vector<double> pinned() const { return pinned_from(free_); }

    /// Free coordinates read back from the pinned values of a state.
    [[nodiscard]] std::vector<double> extract_free(std::span<const double> sorted_x) const {
        std::vector<double> f(free_coords_.size());
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = sorted_x[free_coords_[k].rank - 1];
        return f;
    }

    /// Unnormalised log conditional density of the free coordinates. The
    /// change of variables is linear, so its Jacobian is a constant and is
    /// left out.
    template <ContinuousFamily D>
    [[nodiscard]] double log_density(const D& d, std::span<const double> free) const {
        if (free.size() != free_coords_.size()) {
            throw parameter_error("conditional log-density: expected " + std::to_string(free_coords_.size()) +
                                  " free values, got " + std::to_string(free.size()));
        }
        const std::vector<double> v = pinned_from(free);
        return joint_orderstat_logdensity(d, spec_, v);
    }

    /// Install free coordinates and explicit zone contents (in rank order).
    void set_state(std::span<const double> free, std::span<const double> zone_values) {
        if (free.size() != free_.size() || zone_values.size() != spec_.n - spec_.indices.size()) {
            throw parameter_error("PinnedOrderStats::set_state: size mismatch");
        }
        std::copy(free.begin(), free.end(), free_.begin());
        std::size_t z = 0;
        std::size_t r = 0;
        for (std::size_t pos = 0; pos < spec_.n; ++pos) {
            if (r < spec_.indices.size() && spec_.indices[r] == pos + 1) {
                ++r;
                continue;
            }
            x_[pos] = zone_values[z++];
        }
        write_pinned();
    }

    /// Install free coordinates only; zones must be refilled afterwards.
    void set_free(std::span<const double> free) {
        std::copy(free.begin(), free.end(), free_.begin());
        write_pinned();
    }

    /// Intervals between consecutive pinned values (zone k lies below pinned
    /// rank k; the last zone is above the top rank) with their counts.
    [[nodiscard]] std::vector<std::pair<Interval, std::size_t>> zones() const {
        const std::vector<double> v = pinned();
        std::vector<std::pair<Interval, std::size_t>> out;
        std::size_t prev_rank = 0;
        double prev = -inf;
        for (std::size_t k = 0; k <= v.size(); ++k) {
            const std::size_t rank = k < v.size() ? spec_.indices[k] : spec_.n + 1;
            const double hi = k < v.size() ? v[k] : inf;
            out.push_back({Interval{prev, hi}, rank - prev_rank - 1});
            prev_rank = rank;
            prev = hi;
        }
        return out;
    }

    /// Redraw every non-pinned coordinate from `d` restricted to its zone.
    template <ContinuousFamily D>
    void refill(const D& d, Rng& rng) {
        const std::vector<double> v = pinned();
        std::size_t pos = 0;
        double prev = -inf;
        for (std::size_t k = 0; k <= v.size(); ++k) {
            const std::size_t rank = k < v.size() ? spec_.indices[k] : spec_.n + 1;
            const double hi = k < v.size() ? v[k] : inf;
            const std::size_t count = rank - 1 - pos;
            if (count > 0) {
                const Interval iv{prev, hi};
                if (!iv.valid()) throw infeasible_error("zone below order statistic " + std::to_string(rank) +
                                                        " is empty");
                if (iv.lo == -inf && iv.hi == inf) {
                    for (std::size_t c = 0; c < count; ++c) x_[pos + c] = d.sample(rng);
                } else {
                    const TruncationWindow w = truncation_window(d, iv);
                    if (!(w.mass() > 0.0) && !w.log_upper && !(iv.bounded() && d.pdf(0.5 * (iv.lo + iv.hi)) > 0.0)) {
                        throw infeasible_error("zone (" + std::to_string(iv.lo) + ", " + std::to_string(iv.hi) +
                                               ") has zero probability under the current parameters");
                    }
                    for (std::size_t c = 0; c < count; ++c) x_[pos + c] = sample_in_window(d, w, rng);
                }
            }
            pos = rank;  // skip the pinned slot (rank - 1) itself
            prev = hi;
        }
    }

    /// Proposal standard deviation of free coordinate k under `d`.
    template <ContinuousFamily D>
    [[nodiscard]] double proposal_sd(const D& d, std::size_t k) const {
        const FreeCoordinate& fc = free_coords_[k];
        double var = detail::orderstat_variance_or_nan(d, fc.rank, spec_.n);
        if (std::isnan(var)) var = fallback_var_;
        return std::exp(log_scale_[k]) * std::sqrt(var / std::max(fc.weight, 1e-12));
    }

    /// One random-walk Metropolis step per free coordinate, in order, targeting
    /// the conditional density. Returns the number of accepted moves.
    template <ContinuousFamily D>
    std::size_t mh_sweep(const D& d, Rng& rng, const ScaleAdapter* adapt = nullptr) {
        if (free_.empty()) return 0;
        std::size_t acc = 0;
        double cur = log_density(d, free_);
        std::vector<double> cand = free_;
        for (std::size_t k = 0; k < free_.size(); ++k) {
            const double sd = proposal_sd(d, k);
            cand[k] = free_[k] + sd * rng.normal();
            const double prop = std::isfinite(cand[k]) ? log_density(d, cand) : -inf;
            const bool ok = prop > -inf && std::log(rng.uniform()) < prop - cur;
            if (ok) {
                free_[k] = cand[k];
                cur = prop;
                ++acc;
            } else {
                cand[k] = free_[k];
            }
            accept_[k].add(ok);
            if (adapt != nullptr) adapt->update(log_scale_[k], ok);
        }
        write_pinned();
        return acc;
    }

    void set_fallback_variance(double v) noexcept { fallback_var_ = v; }

    /// Sorted order within each zone is not maintained; returns a sorted copy.
    [[nodiscard]] std::vector<double> sorted_x() const {
        std::vector<double> v = x_;
        std::sort(v.begin(), v.end());
        return v;
    }

    /// Number of non-pinned coordinates outside their zone.
    [[nodiscard]] std::size_t misplaced() const {
        std::size_t bad = 0;
        const auto zs = zones();
        std::size_t pos = 0;
        for (std::size_t k = 0; k < zs.size(); ++k) {
            for (std::size_t c = 0; c < zs[k].second; ++c) bad += zs[k].first.contains(x_[pos + c]) ? 0 : 1;
            pos += zs[k].second + 1;
        }
        return bad;
    }

    /// Direct write access for negative-control tests.
    std::vector<double>& raw() noexcept { return x_; }

private:
    void write_pinned() {
        for (std::size_t k = 0; k < maps_.size(); ++k) x_[spec_.indices[k] - 1] = maps_[k].eval(free_);
    }

    OrderStatSpec spec_;
    std::vector<AffineValue> maps_;
    std::vector<FreeCoordinate> free_coords_;
    std::vector<double> x_;
    std::vector<double> free_;
    std::vector<double> log_scale_;
    std::vector<AcceptanceCounter> accept_;
    double fallback_var_ = 1.0;
};

}  // namespace rgibbs
