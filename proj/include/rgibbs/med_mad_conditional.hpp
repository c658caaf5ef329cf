#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
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

struct MedMadConstraints {
    double m = 0.0;
    double s = 1.0;
    std::size_t n = 3;

    MedMadConstraints() = default;
    MedMadConstraints(double m_, double s_, std::size_t n_) : m(m_), s(s_), n(n_) { validate(); }

    void validate() const {
        if (!std::isfinite(m)) throw config_error("median/MAD constraints: m must be finite");
        if (!(s > 0.0) || !std::isfinite(s)) throw config_error("median/MAD constraints: MAD must be > 0");
        if (n % 2 == 1 && n < 3) throw config_error("median/MAD constraints: odd N must be >= 3");
        if (n % 2 == 0 && n < 8) {
            throw config_error("median/MAD constraints: even N must be >= 8, got " + std::to_string(n));
        }
    }
    [[nodiscard]] bool odd() const noexcept { return n % 2 == 1; }
    [[nodiscard]] std::size_t half() const noexcept { return n / 2; }
};

/// Zone labels 0..3 stand for Z1..Z4: below m-s (outer), between m-s and
/// the median (inner), between the median and m+s (inner), above m+s
/// (outer). For even N the inner zones stop at the median pair and the
/// outer ones at the far MAD pin.
namespace zones {

inline constexpr int count = 4;

[[nodiscard]] inline double reflect(double y, double x) noexcept { return 2.0 * y - x; }
[[nodiscard]] inline int symmetric(int z) noexcept { return 3 - z; }
[[nodiscard]] inline int complementary(int z) noexcept { return (z + 2) % 4; }
[[nodiscard]] inline bool below(int z) noexcept { return z <= 1; }
[[nodiscard]] inline bool inner(int z) noexcept { return z == 1 || z == 2; }

/// Extended zone for the even layout: the zone widened to the nominal MAD
/// boundary m -/+ s.
[[nodiscard]] inline Interval extended(int z, double m, double s, double m1, double m2) noexcept {
    switch (z) {
        case 0: return {-inf, m - s};
        case 1: return {m - s, m1};
        case 2: return {m2, m + s};
        default: return {m + s, inf};
    }
}

}  // namespace zones

enum class MedMadRule {
    exact,    // exact conditional of each pair
    literal,  // odd N only: full-support redraws in the sign-changing cases
};

enum class Role : std::uint8_t { ordinary, median_pin, mad_pin };

struct MedMadAudit {
    double median_residual = 0.0;  // |median(X) - m| / max(1, |m|, s)
    double mad_residual = 0.0;
    std::array<std::size_t, 4> zone_counts{};
    std::array<std::size_t, 4> expected_counts{};
    std::size_t k = 0;      // odd N: #{X >= m + s}
    int delta = 0;          // odd N: 1 when the MAD pin sits at m + s
    std::size_t misplaced = 0;
    bool pins_ok = true;

    [[nodiscard]] bool ok(double tol = 1e-9) const noexcept {
        return median_residual < tol && mad_residual < tol && misplaced == 0 && pins_ok &&
               zone_counts == expected_counts;
    }
};

struct MedMadInitOptions {
    InitMode mode = InitMode::automatic;
    // Odd ladder: k in 1..n (0 selects ceil(n/2)) and delta in {0, 1}.
    std::size_t k = 0;
    int delta = 1;
    // Even ladder: side of the nearer and of the farther MAD pin.
    bool near_pin_above = true;
    bool far_pin_above = false;
};

class MedMadState {
public:
    MedMadState() = default;

    explicit MedMadState(const MedMadConstraints& c, MedMadRule rule = MedMadRule::exact) : c_(c), rule_(rule) {
        c.validate();
        if (rule == MedMadRule::literal && !c.odd()) {
            throw config_error("the literal median/MAD rule is only defined for odd N");
        }
        x_.assign(c.n, c.m);
        role_.assign(c.n, Role::ordinary);
        zone_.assign(c.n, 0);
    }

    [[nodiscard]] const MedMadConstraints& constraints() const noexcept { return c_; }
    [[nodiscard]] MedMadRule rule() const noexcept { return rule_; }
    [[nodiscard]] std::span<const double> x() const noexcept { return x_; }
    [[nodiscard]] Role role(std::size_t k) const noexcept { return role_[k]; }
    [[nodiscard]] int zone(std::size_t k) const noexcept { return zone_[k]; }
    [[nodiscard]] const std::array<std::size_t, 4>& zone_counts() const noexcept { return counts_; }
    [[nodiscard]] std::array<std::size_t, 2> median_pins() const noexcept { return med_; }
    [[nodiscard]] std::array<std::size_t, 2> mad_pins() const noexcept { return mad_; }

    /// Odd N bookkeeping.
    [[nodiscard]] int delta() const noexcept { return x_[mad_[0]] > c_.m ? 1 : 0; }
    [[nodiscard]] std::size_t k() const noexcept { return counts_[3] + static_cast<std::size_t>(delta()); }

    /// Even N bookkeeping.
    [[nodiscard]] double median_halfgap() const noexcept { return e_; }
    [[nodiscard]] std::array<double, 2> mad_distances() const noexcept { return d_; }
    [[nodiscard]] double near_distance() const noexcept { return std::min(d_[0], d_[1]); }
    [[nodiscard]] double far_distance() const noexcept { return std::max(d_[0], d_[1]); }

    /// Visit-census cell: odd N uses (k - 1) * 2 + delta over n * 2 cells;
    /// even N uses the sides of the near and far MAD pins over 4 cells.
    [[nodiscard]] std::size_t census_cells() const noexcept { return c_.odd() ? 2 * c_.half() : 4; }
    [[nodiscard]] std::size_t census_index() const noexcept {
        if (c_.odd()) return (k() - 1) * 2 + static_cast<std::size_t>(delta());
        const std::size_t near = d_[0] <= d_[1] ? 0 : 1;
        const bool near_above = x_[mad_[near]] > c_.m;
        const bool far_above = x_[mad_[1 - near]] > c_.m;
        return (near_above ? 1 : 0) + (far_above ? 2 : 0);
    }

    /// Current zone as an interval.
    [[nodiscard]] Interval zone_interval(int z) const noexcept {
        const double m = c_.m;
        if (c_.odd()) {
            const double s = c_.s;
            switch (z) {
                case 0: return {-inf, m - s};
                case 1: return {m - s, m};
                case 2: return {m, m + s};
                default: return {m + s, inf};
            }
        }
        const double d1 = near_distance();
        const double d2 = far_distance();
        switch (z) {
            case 0: return {-inf, m - d2};
            case 1: return {m - d1, m - e_};
            case 2: return {m + e_, m + d1};
            default: return {m + d2, inf};
        }
    }

    [[nodiscard]] int classify(double v) const noexcept {
        for (int z = 0; z < zones::count; ++z) {
            if (zone_interval(z).contains(v)) return z;
        }
        return -1;
    }

    /// Acceptance of the Metropolis pin moves (even N only).
    [[nodiscard]] const AcceptanceCounter& median_pair_acceptance() const noexcept { return med_acc_; }
    [[nodiscard]] const AcceptanceCounter& mad_pair_acceptance() const noexcept { return mad_acc_; }
    [[nodiscard]] std::size_t latent_draws() const noexcept { return draws_; }

    // ---- construction -------------------------------------------------

    /// Odd ladder with the given (k, delta): Z1 at m - 3s/2, Z2 at m - s/2,
    /// Z3 at m + s/2, Z4 at m + 3s/2.
    void set_odd_ladder(std::size_t k, int delta) {
        const std::size_t n = c_.half();
        if (!c_.odd()) throw config_error("odd ladder requested for even N");
        if (k < 1 || k > n || (delta != 0 && delta != 1) || k < static_cast<std::size_t>(delta)) {
            throw config_error("odd ladder: need 1 <= k <= n and delta in {0, 1}");
        }
        const double m = c_.m;
        const double s = c_.s;
        const std::size_t dk = static_cast<std::size_t>(delta);
        std::vector<std::pair<double, int>> ords;
        ords.insert(ords.end(), n - k + dk, {m - 1.5 * s, 0});
        ords.insert(ords.end(), k - 1, {m - 0.5 * s, 1});
        ords.insert(ords.end(), n - k, {m + 0.5 * s, 2});
        ords.insert(ords.end(), k - dk, {m + 1.5 * s, 3});
        std::size_t pos = 0;
        std::size_t o = 0;
        counts_ = {};
        // Sorted layout: Z1, Z2, median, Z3 with the MAD pin placed by side, Z4.
        const auto put_ord = [&]() {
            x_[pos] = ords[o].first;
            role_[pos] = Role::ordinary;
            zone_[pos] = static_cast<std::uint8_t>(ords[o].second);
            ++counts_[static_cast<std::size_t>(ords[o].second)];
            ++pos;
            ++o;
        };
        const auto put_pin = [&](double v, Role r) {
            x_[pos] = v;
            role_[pos] = r;
            zone_[pos] = 0;
            ++pos;
        };
        for (std::size_t t = 0; t < n - k + dk; ++t) put_ord();
        if (delta == 0) {
            mad_[0] = pos;
            put_pin(m - s, Role::mad_pin);
        }
        for (std::size_t t = 0; t < k - 1; ++t) put_ord();
        med_[0] = pos;
        put_pin(m, Role::median_pin);
        for (std::size_t t = 0; t < n - k; ++t) put_ord();
        if (delta == 1) {
            mad_[0] = pos;
            put_pin(m + s, Role::mad_pin);
        }
        for (std::size_t t = 0; t < k - dk; ++t) put_ord();
        med_[1] = med_[0];
        mad_[1] = mad_[0];
    }

    /// Even ladder: median pins at m -/+ s/4, MAD pins at distances 7s/8 and
    /// 9s/8 on the requested sides, n - 3 inner points at distance s/2 and
    /// n - 1 outer points at distance 3s/2, split so that n points lie below m.
    void set_even_ladder(bool near_above, bool far_above) {
        if (c_.odd()) throw config_error("even ladder requested for odd N");
        const std::size_t n = c_.half();
        const double m = c_.m;
        const double s = c_.s;
        const std::size_t mad_below = (near_above ? 0 : 1) + (far_above ? 0 : 1);
        const std::size_t in_below = (n - 3) / 2;
        const std::size_t out_below = n - 1 - mad_below - in_below;
        e_ = 0.25 * s;
        d_ = {0.875 * s, 2.0 * s - 0.875 * s};
        std::size_t pos = 0;
        counts_ = {};
        const auto put_ord = [&](double v, int z) {
            x_[pos] = v;
            role_[pos] = Role::ordinary;
            zone_[pos] = static_cast<std::uint8_t>(z);
            ++counts_[static_cast<std::size_t>(z)];
            ++pos;
        };
        const auto put_pin = [&](double v, Role r) {
            x_[pos] = v;
            role_[pos] = r;
            zone_[pos] = 0;
            return pos++;
        };
        for (std::size_t t = 0; t < out_below; ++t) put_ord(m - 1.5 * s, 0);
        for (std::size_t t = 0; t < n - 1 - out_below; ++t) put_ord(m + 1.5 * s, 3);
        for (std::size_t t = 0; t < in_below; ++t) put_ord(m - 0.5 * s, 1);
        for (std::size_t t = 0; t < n - 3 - in_below; ++t) put_ord(m + 0.5 * s, 2);
        med_[0] = put_pin(m - e_, Role::median_pin);
        med_[1] = put_pin(m + e_, Role::median_pin);
        mad_[0] = put_pin(near_above ? m + d_[0] : m - d_[0], Role::mad_pin);
        mad_[1] = put_pin(far_above ? m + d_[1] : m - d_[1], Role::mad_pin);
    }

    /// Adopt an arbitrary sample that already has median m and MAD s (up to
    /// rounding): pins are chosen by rank and reset to exact values.
    /// Returns false when some coordinate falls on a zone boundary.
    bool adopt(std::span<const double> sample) {
        if (sample.size() != c_.n) throw parameter_error("adopt: sample size mismatch");
        const std::size_t N = c_.n;
        const std::size_t n = c_.half();
        const double m = c_.m;
        std::copy(sample.begin(), sample.end(), x_.begin());
        std::fill(role_.begin(), role_.end(), Role::ordinary);
        std::vector<std::size_t> idx(N);
        for (std::size_t t = 0; t < N; ++t) idx[t] = t;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x_[a] < x_[b]; });
        if (c_.odd()) {
            med_ = {idx[n], idx[n]};
            role_[idx[n]] = Role::median_pin;
            x_[idx[n]] = m;
        } else {
            med_ = {idx[n - 1], idx[n]};
            e_ = 0.5 * (x_[idx[n]] - x_[idx[n - 1]]);
            if (!(e_ > 0.0)) return false;
            role_[med_[0]] = Role::median_pin;
            role_[med_[1]] = Role::median_pin;
            x_[med_[0]] = m - e_;
            x_[med_[1]] = m + e_;
        }
        std::vector<std::size_t> by_dist;
        for (std::size_t t = 0; t < N; ++t) {
            if (role_[t] == Role::ordinary) by_dist.push_back(t);
        }
        std::sort(by_dist.begin(), by_dist.end(),
                  [&](std::size_t a, std::size_t b) { return std::abs(x_[a] - m) < std::abs(x_[b] - m); });
        if (c_.odd()) {
            // Y_(n+1) overall; the median pin holds Y_(1) = 0.
            const std::size_t p = by_dist[n - 1];
            mad_ = {p, p};
            role_[p] = Role::mad_pin;
            x_[p] = x_[p] > m ? m + c_.s : m - c_.s;
        } else {
            // Y_(n), Y_(n+1) overall; the median pins hold Y_(1), Y_(2).
            const std::size_t p = by_dist[n - 3];
            const std::size_t q = by_dist[n - 2];
            const double u = 0.5 * (std::abs(x_[q] - m) - std::abs(x_[p] - m));
            mad_ = {p, q};
            d_ = {c_.s - u, c_.s + u};
            if (!(d_[0] > e_)) return false;
            for (int t = 0; t < 2; ++t) {
                role_[mad_[t]] = Role::mad_pin;
                x_[mad_[t]] = x_[mad_[t]] > m ? m + d_[t] : m - d_[t];
            }
        }
        counts_ = {};
        for (std::size_t t = 0; t < N; ++t) {
            if (role_[t] != Role::ordinary) continue;
            const int z = classify(x_[t]);
            if (z < 0) return false;
            zone_[t] = static_cast<std::uint8_t>(z);
            ++counts_[static_cast<std::size_t>(z)];
        }
        return true;
    }

    // ---- sampling -----------------------------------------------------

    /// Cache the zone windows under `d`; call before pair updates whenever
    /// the parameters change.
    template <ContinuousFamily D>
    void prepare(const D& d) {
        for (int z = 0; z < zones::count; ++z) {
            win_[static_cast<std::size_t>(z)] = truncation_window(d, zone_interval(z));
        }
    }

    template <ContinuousFamily D>
    void pair_update(std::size_t i, std::size_t j, const D& d, Rng& rng) {
        if (i == j || i >= c_.n || j >= c_.n) throw parameter_error("pair_update: need two distinct valid indices");
        const Role ri = role_[i];
        const Role rj = role_[j];
        if (ri == Role::ordinary && rj == Role::ordinary) {
            ordinary_pair(i, j, d, rng);
        } else if (ri == Role::ordinary || rj == Role::ordinary) {
            const std::size_t o = ri == Role::ordinary ? i : j;
            const std::size_t p = ri == Role::ordinary ? j : i;
            if (role_[p] == Role::median_pin) {
                redraw(o, d, rng);
            } else {
                pin_ordinary(p, o, d, rng);
            }
        } else if (ri == Role::median_pin && rj == Role::median_pin) {
            median_pair(d, rng);
        } else if (ri == Role::mad_pin && rj == Role::mad_pin) {
            mad_pair(i, j, d, rng);
        }
        // median pin with MAD pin: both are determined by the rest.
    }

    template <ContinuousFamily D>
    void sweep(const D& d, Rng& rng, std::size_t n_pairs) {
        prepare(d);
        for (std::size_t t = 0; t < n_pairs; ++t) {
            const auto [i, j] = rng.distinct_pair(c_.n);
            pair_update(i, j, d, rng);
        }
    }

    // ---- audit --------------------------------------------------------

    [[nodiscard]] MedMadAudit audit() const {
        MedMadAudit a;
        const double m = c_.m;
        const double s = c_.s;
        const double scale = std::max({1.0, std::abs(m), s});
        const double med = median(x_);
        const double md = mad(x_);
        a.median_residual = std::isnan(med) ? inf : std::abs(med - m) / scale;
        a.mad_residual = std::isnan(md) ? inf : std::abs(md - s) / scale;
        const std::size_t n = c_.half();
        if (c_.odd()) {
            a.pins_ok = x_[med_[0]] == m && (x_[mad_[0]] == m + s || x_[mad_[0]] == m - s);
        } else {
            const double lo = std::min(x_[med_[0]], x_[med_[1]]);
            const double hi = std::max(x_[med_[0]], x_[med_[1]]);
            a.pins_ok = lo == m - e_ && hi == m + e_ &&
                        std::abs(std::abs(x_[mad_[0]] - m) - d_[0]) <= 1e-12 * scale &&
                        std::abs(std::abs(x_[mad_[1]] - m) - d_[1]) <= 1e-12 * scale;
        }
        for (std::size_t t = 0; t < c_.n; ++t) {
            if (role_[t] != Role::ordinary) continue;
            const int z = classify(x_[t]);
            if (z < 0 || z != zone_[t]) ++a.misplaced;
            if (z >= 0) ++a.zone_counts[static_cast<std::size_t>(z)];
        }
        if (c_.odd()) {
            a.delta = x_[mad_[0]] > m ? 1 : 0;
            a.k = a.zone_counts[3] + static_cast<std::size_t>(a.delta);
            const std::size_t k = a.k;
            const std::size_t dk = static_cast<std::size_t>(a.delta);
            if (k >= 1 && k <= n && k >= dk) a.expected_counts = {n - k + dk, k - 1, n - k, k - dk};
        } else {
            // Inner and outer totals are fixed; the split by side follows
            // from n points below the median.
            std::size_t mad_below = 0;
            for (std::size_t t : mad_) mad_below += x_[t] < m ? 1 : 0;
            a.expected_counts = a.zone_counts;
            const std::size_t inner = a.zone_counts[1] + a.zone_counts[2];
            const std::size_t outer = a.zone_counts[0] + a.zone_counts[3];
            const std::size_t below = a.zone_counts[0] + a.zone_counts[1] + mad_below + 1;
            if (inner != n - 3 || outer != n - 1 || below != n) a.expected_counts[0] = a.zone_counts[0] + 1;
        }
        return a;
    }

    /// Direct write access for negative-control tests.
    std::vector<double>& raw() noexcept { return x_; }

private:
    template <ContinuousFamily D>
    double draw_zone(int z, const D& d, Rng& rng) {
        ++draws_;
        return sample_in_window(d, win_[static_cast<std::size_t>(z)], rng);
    }

    template <ContinuousFamily D>
    void redraw(std::size_t k, const D& d, Rng& rng) {
        x_[k] = draw_zone(zone_[k], d, rng);
    }

    void move_zone(std::size_t k, int z) {
        --counts_[zone_[k]];
        zone_[k] = static_cast<std::uint8_t>(z);
        ++counts_[static_cast<std::size_t>(z)];
    }

    [[nodiscard]] double mass(int z) const noexcept { return win_[static_cast<std::size_t>(z)].mass(); }

    // Draw from d restricted to the union of two zones.
    template <ContinuousFamily D>
    std::pair<double, int> draw_union(int za, int zb, const D& d, Rng& rng) {
        const double fa = mass(za);
        const double fb = mass(zb);
        const int z = (fa + fb > 0.0 ? rng.uniform() * (fa + fb) < fa : rng.bernoulli(0.5)) ? za : zb;
        return {draw_zone(z, d, rng), z};
    }

    template <ContinuousFamily D>
    void ordinary_pair(std::size_t i, std::size_t j, const D& d, Rng& rng) {
        const int zi = zone_[i];
        const int zj = zone_[j];
        if (zj != zones::complementary(zi)) {
            redraw(i, d, rng);
            redraw(j, d, rng);
            return;
        }
        // {Z1, Z3} and {Z2, Z4} carry the same counts above and below the
        // median and inside and outside the MAD band, so the pair may move
        // between them.
        int ni;
        if (rule_ == MedMadRule::literal) {
            double v;
            do {
                ++draws_;
                v = d.sample(rng);
                ni = classify(v);
            } while (ni < 0);
            x_[i] = v;
            move_zone(i, ni);
            move_zone(j, zones::complementary(ni));
            redraw(j, d, rng);
            return;
        }
        const double w13 = mass(0) * mass(2);
        const double w24 = mass(1) * mass(3);
        const bool first = w13 + w24 > 0.0 ? rng.uniform() * (w13 + w24) < w13 : zi == 0 || zi == 2;
        const bool flip = rng.bernoulli(0.5);
        ni = first ? (flip ? 2 : 0) : (flip ? 3 : 1);
        move_zone(i, ni);
        move_zone(j, zones::complementary(ni));
        redraw(i, d, rng);
        redraw(j, d, rng);
    }

    // MAD pin p with ordinary point o. On the same side of the median nothing
    // but o can move. On opposite sides the pin may jump to its mirror image
    // about m while o moves to the mirrored zone.
    template <ContinuousFamily D>
    void pin_ordinary(std::size_t p, std::size_t o, const D& d, Rng& rng) {
        const double m = c_.m;
        const bool pin_above = x_[p] > m;
        const int zo = zone_[o];
        if (pin_above == !zones::below(zo)) {
            redraw(o, d, rng);
            return;
        }
        const int zs = zones::symmetric(zo);
        const double mirror = mirror_pin(p);
        if (rule_ == MedMadRule::literal) {
            const auto [v, z] = draw_union(zo, zs, d, rng);
            x_[o] = v;
            if (z != zo) {
                move_zone(o, z);
                x_[p] = mirror;
            }
            return;
        }
        const double keep = d.pdf(x_[p]) * mass(zo);
        const double flip = d.pdf(mirror) * mass(zs);
        if (keep + flip > 0.0 && rng.uniform() * (keep + flip) >= keep) {
            x_[p] = mirror;
            move_zone(o, zs);
        }
        redraw(o, d, rng);
    }

    [[nodiscard]] double mirror_pin(std::size_t p) const noexcept {
        const double m = c_.m;
        const bool above = x_[p] > m;
        if (c_.odd()) return above ? m - c_.s : m + c_.s;
        const double dist = p == mad_[0] ? d_[0] : d_[1];
        return above ? m - dist : m + dist;
    }

    // Even N: the two median pins m -/+ e. Any e below the nearest other
    // distance to m is admissible; propose the first pin from d on
    // (m - Y, m + Y) and put the second at its mirror image, accepting on the
    // second pin's density.
    template <ContinuousFamily D>
    void median_pair(const D& d, Rng& rng) {
        const double m = c_.m;
        double y3 = inf;
        for (std::size_t t = 0; t < c_.n; ++t) {
            if (role_[t] != Role::median_pin) y3 = std::min(y3, std::abs(x_[t] - m));
        }
        const std::size_t i = med_[0];
        const std::size_t j = med_[1];
        ++draws_;
        const double xi = sample_truncated(d, Interval{m - y3, m + y3}, rng);
        const double e = std::abs(xi - m);
        bool ok = e > 0.0 && e < y3;
        if (ok) {
            const double xj = zones::reflect(m, xi);
            const double log_ratio = d.log_pdf(xj) - d.log_pdf(x_[j]);
            ok = std::log(rng.uniform()) < log_ratio;
            if (ok) {
                e_ = e;
                x_[i] = xi > m ? m + e : m - e;
                x_[j] = xi > m ? m - e : m + e;
                prepare(d);
            }
        }
        med_acc_.add(ok);
    }

    // Even N: the two MAD pins at distances d_i + d_j = 2s. Other points fix
    // a band of admissible distances; propose the first pin from d on the
    // band (both sides when the pins straddle the median) and place the second
    // by reflection through m + s, m - s, or by a shift of 2s.
    template <ContinuousFamily D>
    void mad_pair(std::size_t i, std::size_t j, const D& d, Rng& rng) {
        const double m = c_.m;
        const double s = c_.s;
        double lo_in = e_;
        double hi_out = inf;
        for (std::size_t t = 0; t < c_.n; ++t) {
            if (role_[t] != Role::ordinary) continue;
            const double y = std::abs(x_[t] - m);
            if (zones::inner(zone_[t])) {
                lo_in = std::max(lo_in, y);
            } else {
                hi_out = std::min(hi_out, y);
            }
        }
        const double lo_d = std::max(lo_in, 2.0 * s - hi_out);
        const double hi_d = std::min(hi_out, 2.0 * s - lo_in);
        bool ok = lo_d < hi_d;
        if (ok) {
            const bool ai = x_[i] > m;
            const bool aj = x_[j] > m;
            const Interval above{m + lo_d, m + hi_d};
            const Interval below{m - hi_d, m - lo_d};
            double xi;
            ++draws_;
            if (ai == aj) {
                xi = sample_truncated(d, ai ? above : below, rng);
            } else {
                const TruncationWindow wa = truncation_window(d, above);
                const TruncationWindow wb = truncation_window(d, below);
                const double fa = wa.mass();
                const double fb = wb.mass();
                const bool up = fa + fb > 0.0 ? rng.uniform() * (fa + fb) < fa : rng.bernoulli(0.5);
                xi = sample_in_window(d, up ? wa : wb, rng);
            }
            const bool up_i = xi > m;
            const double di = std::abs(xi - m);
            const double dj = 2.0 * s - di;
            const bool up_j = ai == aj ? up_i : !up_i;
            const double xj = up_j ? m + dj : m - dj;
            ok = di > lo_d && di < hi_d;
            if (ok) {
                ok = std::log(rng.uniform()) < d.log_pdf(xj) - d.log_pdf(x_[j]);
            }
            if (ok) {
                const std::size_t si = i == mad_[0] ? 0 : 1;
                d_[si] = di;
                d_[1 - si] = dj;
                x_[i] = up_i ? m + di : m - di;
                x_[j] = xj;
                prepare(d);
            }
        }
        mad_acc_.add(ok);
    }

    MedMadConstraints c_;
    MedMadRule rule_ = MedMadRule::exact;
    std::vector<double> x_;
    std::vector<Role> role_;
    std::vector<std::uint8_t> zone_;
    std::array<std::size_t, 4> counts_{};
    std::array<std::size_t, 2> med_{};
    std::array<std::size_t, 2> mad_{};
    double e_ = 0.0;
    std::array<double, 2> d_{};
    std::array<TruncationWindow, 4> win_{};
    AcceptanceCounter med_acc_;
    AcceptanceCounter mad_acc_;
    std::size_t draws_ = 0;
};

/// Initial state with median m and MAD s. Linear mode rescales a sample from
/// `theta0`; deterministic mode uses the ladders above.
template <ContinuousFamily D>
MedMadState init_medmad_state(const MedMadConstraints& c, const D& theta0, Rng& rng,
                              const MedMadInitOptions& opt = {}, MedMadRule rule = MedMadRule::exact) {
    MedMadState st(c, rule);
    InitMode mode = opt.mode;
    if (mode == InitMode::automatic) {
        const Interval sup = theta0.support();
        mode = (sup.lo == -inf && sup.hi == inf) ? InitMode::linear : InitMode::deterministic;
    }
    if (mode == InitMode::linear) {
        bool done = false;
        for (int attempt = 0; attempt < 100 && !done; ++attempt) {
            std::vector<double> z(c.n);
            for (double& v : z) v = theta0.sample(rng);
            const double zm = median(z);
            const double zs = mad(z);
            if (!(zs > 0.0)) continue;
            for (double& v : z) v = (v - zm) * c.s / zs + c.m;
            done = st.adopt(z);
        }
        if (!done) throw infeasible_error("linear initialization failed to produce distinct distances");
        detail::require_support(theta0, st.x(), "linear initialization (use deterministic mode)");
        return st;
    }
    if (c.odd()) {
        const std::size_t k = opt.k == 0 ? (c.half() + 1) / 2 : opt.k;
        st.set_odd_ladder(k, opt.delta);
    } else {
        st.set_even_ladder(opt.near_pin_above, opt.far_pin_above);
    }
    detail::require_support(theta0, st.x(), "deterministic initialization");
    return st;
}

template <ContinuousFamily D>
void pair_update_odd(MedMadState& st, std::size_t i, std::size_t j, const D& theta, Rng& rng) {
    if (!st.constraints().odd()) throw parameter_error("pair_update_odd on an even-N state");
    st.prepare(theta);
    st.pair_update(i, j, theta, rng);
}

template <ContinuousFamily D>
void pair_update_even(MedMadState& st, std::size_t i, std::size_t j, const D& theta, Rng& rng) {
    if (st.constraints().odd()) throw parameter_error("pair_update_even on an odd-N state");
    st.prepare(theta);
    st.pair_update(i, j, theta, rng);
}

template <ContinuousFamily D>
void gibbs_sweep_medmad(MedMadState& st, const D& theta, Rng& rng, std::size_t n_pairs = 0) {
    st.sweep(theta, rng, n_pairs == 0 ? st.constraints().n : n_pairs);
}

inline MedMadAudit audit_medmad(const MedMadState& st) { return st.audit(); }

}  // namespace rgibbs
