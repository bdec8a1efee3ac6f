#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "vrw/common.hpp"
#include "vrw/rng.hpp"
#include "vrw/weights.hpp"

namespace vrw {

/// Initial local time configuration: finite-support counts plus default 0.
/// The trivial configuration is the empty map.
struct InitialConfig {
    std::map<long, std::uint64_t> z0;
    long origin = 0;

    std::uint64_t at(long x) const {
        auto it = z0.find(x);
        return it == z0.end() ? 0 : it->second;
    }
};

struct Boundary {
    enum Kind { FreeLine, Reflect } kind = FreeLine;
    long a = 0, b = 0;  // meaningful only for Reflect

    static Boundary free_line() { return {}; }
    static Boundary reflect(long a, long b) {
        if (a > b) throw ConfigError("Boundary: need a <= b");
        Boundary bd;
        bd.kind = Reflect;
        bd.a = a;
        bd.b = b;
        return bd;
    }
};

/// Walk state over a dense, geometrically-reallocating bracket of sites.
/// z includes the initial configuration and the time-0 visit to the origin:
/// Z_n(y) = z0(y) + #{k <= n : X_k = y}, so sum_x (z - z0) = n + 1.
class WalkState {
public:
    WalkState(const InitialConfig& config, Boundary boundary, std::uint64_t span_bound = 1u << 22)
        : config_(config), boundary_(boundary), span_bound_(span_bound), pos_(config.origin) {
        if (boundary_.kind == Boundary::Reflect &&
            (config.origin < boundary_.a || config.origin > boundary_.b))
            throw ConfigError("WalkState: origin outside the reflecting interval");
        long lo = config.origin, hi = config.origin;
        for (const auto& [x, c] : config.z0) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        reserve(lo - 1, hi + 1);
        for (const auto& [x, c] : config.z0) site(x).z = c;
        site(pos_).z += 1;  // time-0 visit
        site(pos_).last_visit = 0;
        min_visited_ = max_visited_ = pos_;
    }

    long pos() const { return pos_; }
    std::uint64_t steps() const { return n_; }
    const Boundary& boundary() const { return boundary_; }
    const InitialConfig& config() const { return config_; }

    std::uint64_t z(long x) const { return in_range(x) ? cell(x).z : config_.at(x); }
    double y_plus(long x) const { return in_range(x) ? cell(x).y_plus.value() : 0.0; }
    double y_minus(long x) const { return in_range(x) ? cell(x).y_minus.value() : 0.0; }
    double m(long x) const { return y_plus(x) - y_minus(x); }
    /// Step index of the most recent visit (0 = the time-0 origin visit);
    /// max() if never visited.
    std::uint64_t last_visit(long x) const {
        return in_range(x) ? cell(x).last_visit : kNever;
    }

    long min_visited() const { return min_visited_; }
    long max_visited() const { return max_visited_; }

    static constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

    /// One transition: from interior x jump to x+-1 with probability
    /// w(Z(x+-1)) / (w(Z(x+1)) + w(Z(x-1))); at a reflecting edge the inward
    /// jump has probability 1. The departure site's Y accumulator gains
    /// 1/w(Z of the target before arrival).
    void step(const WeightFunction& wf, Rng& rng) {
        long x = pos_;
        int dir;
        if (boundary_.kind == Boundary::Reflect && x == boundary_.a)
            dir = +1;
        else if (boundary_.kind == Boundary::Reflect && x == boundary_.b)
            dir = -1;
        else {
            double wr = wf.at(z(x + 1));
            double wl = wf.at(z(x - 1));
            dir = rng.uniform() * (wr + wl) < wr ? +1 : -1;
        }
        long target = x + dir;
        reserve(std::min(target - 1, min_visited_), std::max(target + 1, max_visited_));
        double inc = 1.0 / wf.at(cell(target).z);
        if (dir > 0)
            site(x).y_plus += inc;
        else
            site(x).y_minus += inc;
        site(target).z += 1;
        ++n_;
        site(target).last_visit = n_;
        pos_ = target;
        min_visited_ = std::min(min_visited_, target);
        max_visited_ = std::max(max_visited_, target);
    }

private:
    struct Cell {
        std::uint64_t z = 0;
        KahanSum y_plus;
        KahanSum y_minus;
        std::uint64_t last_visit = kNever;
    };

    bool in_range(long x) const { return x >= base_ && x < base_ + long(cells_.size()); }
    const Cell& cell(long x) const { return cells_[std::size_t(x - base_)]; }
    Cell& site(long x) {
        reserve(x, x);
        return cells_[std::size_t(x - base_)];
    }

    void reserve(long lo, long hi) {
        if (!cells_.empty() && lo >= base_ && hi < base_ + long(cells_.size())) return;
        long new_lo = cells_.empty() ? lo - 4 : std::min(lo, base_);
        long new_hi = cells_.empty() ? hi + 4 : std::max(hi, base_ + long(cells_.size()) - 1);
        // geometric growth so repeated single-site extensions stay amortized
        long span = new_hi - new_lo + 1;
        long grown = std::max(span, long(cells_.size()) * 2);
        long pad = (grown - span) / 2;
        new_lo -= pad;
        new_hi += grown - span - pad;
        if (std::uint64_t(new_hi - new_lo + 1) > span_bound_)
            throw ResourceError("WalkState: visited range exceeds the span bound");
        std::vector<Cell> next(std::size_t(new_hi - new_lo + 1));
        for (std::size_t i = 0; i < cells_.size(); ++i)
            next[std::size_t(base_ - new_lo) + i] = cells_[i];
        cells_ = std::move(next);
        base_ = new_lo;
    }

    InitialConfig config_;
    Boundary boundary_;
    std::uint64_t span_bound_;
    long pos_;
    std::uint64_t n_ = 0;
    std::vector<Cell> cells_;
    long base_ = 0;
    long min_visited_ = 0, max_visited_ = 0;
};

/// Configuration constant of the visit-count telescoping: each arrival at x
/// contributes 1/w(Z(x) before arrival), so the two inbound Y sums add up to
/// W(Z_n(x)) - W(Z_0(x)) with Z_0(x) = z0(x) + 1{x = origin}.
inline double ynpm_correction(const WalkState& s, WCache& cache, long x) {
    std::uint64_t zx0 = s.config().at(x) + (x == s.config().origin ? 1 : 0);
    return cache.big_w(zx0);
}

/// Max over visited sites of |Y+(x-1) + Y-(x+1) - W(Z(x)) + W(Z_0(x))|.
/// The identity is exact; the residual is pure floating-point error.
inline double check_ynpm(const WalkState& s, WCache& cache) {
    double worst = 0.0;
    for (long x = s.min_visited(); x <= s.max_visited(); ++x) {
        double lhs = s.y_plus(x - 1) + s.y_minus(x + 1);
        double rhs = cache.big_w(s.z(x)) - ynpm_correction(s, cache, x);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

/// The combination W(Z(x+2)) - W(Z(x)) - Y-(x+3) + Y+(x-1) - M(x+1) equals a
/// constant c(x, C) for all n; callers snapshot it along a run and check the
/// drift against the first value.
inline double eqw_stat(const WalkState& s, WCache& cache, long x) {
    return cache.big_w(s.z(x + 2)) - cache.big_w(s.z(x)) - s.y_minus(x + 3) + s.y_plus(x - 1) -
           s.m(x + 1);
}

struct SiteProfile {
    long x;
    double fraction;  // z(x) / n
    double w_diff;    // W(Z at the most-visited site) - W(Z(x))
};

struct LocalizationReport {
    long range_lo = 0, range_hi = 0;   // recent range as an interval
    std::size_t range_size = 0;
    long window_lo = 0, window_hi = 0;  // raw visited-in-window interval
    std::size_t window_size = 0;
    bool attractor_mode = false;  // range refined via the stable-core estimate
    bool is_interval = true;
    double window_fraction = 0.5;
    double boundary_y_increment = 0.0;  // filled by vrrw_run when windowed
    double delta_stat = 0.0;            // W(Z(c+1)) - W(Z(c-1)) at the center c
    std::vector<SiteProfile> profile;
};

/// Local-time checkpoints taken before the final window opens, used to
/// estimate per-site visit-rate trends.
struct WindowSnapshots {
    std::uint64_t prev_start = 0;    // step index of the pre-window checkpoint
    std::uint64_t window_start = 0;  // step index where the window opens
    std::map<long, std::uint64_t> z_prev_start;
    std::map<long, std::uint64_t> z_window_start;

    std::uint64_t at_prev(long x) const {
        auto it = z_prev_start.find(x);
        return it == z_prev_start.end() ? 0 : it->second;
    }
    std::uint64_t at_window(long x) const {
        auto it = z_window_start.find(x);
        return it == z_window_start.end() ? 0 : it->second;
    }
};

namespace detail {
// Stable-core thresholds. A site belongs to the core when its visit rate in
// the final window is at least kStableRateRatio times its rate in the
// preceding stretch (a persistent share; sites being abandoned have visit
// counts growing like n^C with C clearly below 1) and it carries a
// non-negligible share of the window. The core is accepted as the attractor
// estimate only when it is at least a pair and dominates the window's visits;
// otherwise the raw visited interval stands (delocalized regimes).
constexpr double kStableRateRatio = 0.9659;  // = 2^(-0.05): growth exponent >= 0.95
constexpr double kCoreMinWindowShare = 2.0e-4;
constexpr double kCoreMinWindowVisits = 64.0;
constexpr double kCoreMinPrevVisits = 16.0;
constexpr double kCoreDominance = 0.9;
}  // namespace detail

/// Recent-range estimate over the final `window_fraction` of the run.
///
/// The base reading is the set of distinct sites visited in the window (always
/// an integer interval for a nearest-neighbour walk; is_interval records the
/// sanity check). When pre-window checkpoints are supplied, the reading is
/// refined into an attractor estimate: the sites whose visit share persists
/// across the window boundary form the stable core, and when that core is a
/// dominant pair-or-larger the range becomes the core extended by one site on
/// each side whenever the weight's mass sum 1/w diverges (such edges are
/// revisited at an unboundedly slowing rate, so any finite window undercounts
/// them), clipped to a reflecting interval. With a convergent mass sum the
/// core alone is the estimate (trapping on the core is final).
inline LocalizationReport localization_report(const WalkState& s, WCache& cache,
                                              double window_fraction = 0.5,
                                              const WindowSnapshots* snaps = nullptr) {
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw ConfigError("localization_report: window_fraction must be in (0, 1]");
    LocalizationReport rep;
    rep.window_fraction = window_fraction;
    std::uint64_t cutoff =
        static_cast<std::uint64_t>(static_cast<double>(s.steps()) * (1.0 - window_fraction));
    long lo = 0, hi = 0;
    bool any = false;
    std::size_t count = 0;
    for (long x = s.min_visited(); x <= s.max_visited(); ++x) {
        std::uint64_t lv = s.last_visit(x);
        if (lv == WalkState::kNever || lv < cutoff) continue;
        if (!any) {
            lo = hi = x;
            any = true;
        } else {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        ++count;
    }
    if (!any) return rep;
    rep.window_lo = lo;
    rep.window_hi = hi;
    rep.window_size = std::size_t(hi - lo + 1);
    rep.is_interval = (count == rep.window_size);

    if (snaps && snaps->window_start > snaps->prev_start && snaps->window_start < s.steps()) {
        double window_len = double(s.steps() - snaps->window_start);
        double prev_len = double(snaps->window_start - snaps->prev_start);
        long clo = 0, chi = 0;
        bool core = false;
        double v_total = 0.0;
        // sites absent from a checkpoint map were unvisited then: local time z0
        auto z_at = [&](const std::map<long, std::uint64_t>& m, long x) {
            auto it = m.find(x);
            return it == m.end() ? double(s.config().at(x)) : double(it->second);
        };
        for (long x = s.min_visited(); x <= s.max_visited(); ++x) {
            double v2 = double(s.z(x)) - z_at(snaps->z_window_start, x);
            double v1 = z_at(snaps->z_window_start, x) - z_at(snaps->z_prev_start, x);
            v_total += v2;
            if (v2 < std::max(detail::kCoreMinWindowVisits,
                              detail::kCoreMinWindowShare * window_len))
                continue;
            if (v1 < detail::kCoreMinPrevVisits) continue;
            if ((v2 / window_len) / (v1 / prev_len) < detail::kStableRateRatio) continue;
            if (!core) {
                clo = chi = x;
                core = true;
            } else {
                clo = std::min(clo, x);
                chi = std::max(chi, x);
            }
        }
        if (core && chi - clo + 1 >= 2) {
            double v_core = 0.0;
            for (long x = clo; x <= chi; ++x)
                v_core += double(s.z(x)) - double(snaps->at_window(x));
            if (v_core >= detail::kCoreDominance * v_total) {
                long elo = clo, ehi = chi;
                if (cache.weight().mass_status() == MassStatus::Divergent) {
                    --elo;
                    ++ehi;
                    if (s.boundary().kind == Boundary::Reflect) {
                        elo = std::max(elo, s.boundary().a);
                        ehi = std::min(ehi, s.boundary().b);
                    }
                }
                rep.attractor_mode = true;
                lo = elo;
                hi = ehi;
            }
        }
    }

    rep.range_lo = lo;
    rep.range_hi = hi;
    rep.range_size = std::size_t(hi - lo + 1);
    long c = (lo + hi) / 2;
    rep.delta_stat = cache.big_w(s.z(c + 1)) - cache.big_w(s.z(c - 1));
    std::uint64_t zmax = 0;
    for (long x = lo; x <= hi; ++x) zmax = std::max(zmax, s.z(x));
    double wmax = cache.big_w(zmax);
    double nsteps = std::max<double>(1.0, double(s.steps()));
    for (long x = lo; x <= hi; ++x)
        rep.profile.push_back({x, double(s.z(x)) / nsteps, wmax - cache.big_w(s.z(x))});
    return rep;
}

struct ProfileSummary {
    bool valid = false;        // only 4- and 5-site ranges are summarized
    double edge_max = 0.0;     // largest local-time fraction among the two edge sites
    double central_min = 0.0;  // smallest fraction among the central sites
    double center = 0.0;       // middle-site fraction (5-site ranges)
    double flank_sum = 0.0;    // fractions of the two sites flanking the center (5-site)
};

inline ProfileSummary profile_summary(const LocalizationReport& rep) {
    ProfileSummary p;
    const auto& pr = rep.profile;
    if (rep.range_size == 4 && pr.size() == 4) {
        p.valid = true;
        p.edge_max = std::max(pr[0].fraction, pr[3].fraction);
        p.central_min = std::min(pr[1].fraction, pr[2].fraction);
    } else if (rep.range_size == 5 && pr.size() == 5) {
        p.valid = true;
        p.edge_max = std::max(pr[0].fraction, pr[4].fraction);
        p.center = pr[2].fraction;
        p.flank_sum = pr[1].fraction + pr[3].fraction;
        p.central_min = std::min({pr[1].fraction, pr[2].fraction, pr[3].fraction});
    }
    return p;
}

struct ReplicaResult {
    std::uint64_t steps = 0;
    std::uint64_t seed = 0;
    LocalizationReport report;
    double ynpm_residual = 0.0;
    double eqw_drift = 0.0;
    long final_pos = 0;
    bool failed = false;
    std::string error;
};

/// Full replica run: steps the walk, snapshots the eqW statistic at a fixed
/// cadence to measure its drift, captures the boundary-Y increments over the
/// final window, and closes with the localization report and the exact
/// identity residual.
inline ReplicaResult vrrw_run(const WeightFunction& wf, WCache& cache,
                              const InitialConfig& config, Boundary boundary,
                              std::uint64_t steps, Rng& rng, double window_fraction = 0.5,
                              long eqw_site = 0, std::uint64_t span_bound = 1u << 22) {
    if (steps < 1) throw ConfigError("vrrw_run: steps must be >= 1");
    ReplicaResult res;
    res.steps = steps;
    WalkState s(config, boundary, span_bound);
    std::uint64_t cutoff =
        static_cast<std::uint64_t>(static_cast<double>(steps) * (1.0 - window_fraction));
    // pre-window checkpoint for visit-rate trends: the second half of the
    // pre-window period, so both stretches sit at comparable (log-scale) ages
    std::uint64_t prev_cutoff = cutoff / 2;
    std::uint64_t eqw_cadence = std::max<std::uint64_t>(1, steps / 64);
    double eqw_first = 0.0;
    bool have_eqw = false;
    WindowSnapshots snaps;
    snaps.prev_start = prev_cutoff;
    snaps.window_start = cutoff;
    // boundary-Y bookkeeping needs the window-start values over the whole
    // eventually-recent range; capture every visited site at the cutoff step
    std::vector<std::pair<long, std::pair<double, double>>> y_at_cutoff;
    for (std::uint64_t k = 0; k < steps; ++k) {
        s.step(wf, rng);
        if (k + 1 == prev_cutoff) {
            for (long x = s.min_visited(); x <= s.max_visited(); ++x)
                snaps.z_prev_start[x] = s.z(x);
        }
        if (k + 1 == cutoff) {
            for (long x = s.min_visited(); x <= s.max_visited(); ++x)
                snaps.z_window_start[x] = s.z(x);
            for (long x = s.min_visited() - 1; x <= s.max_visited() + 1; ++x)
                y_at_cutoff.push_back({x, {s.y_plus(x), s.y_minus(x)}});
        }
        if ((k + 1) % eqw_cadence == 0 || k + 1 == steps) {
            double d = eqw_stat(s, cache, eqw_site);
            if (!have_eqw) {
                eqw_first = d;
                have_eqw = true;
            } else {
                res.eqw_drift = std::max(res.eqw_drift, std::abs(d - eqw_first));
            }
        }
    }
    res.report = localization_report(s, cache, window_fraction, &snaps);
    auto y_start = [&](long x) -> std::pair<double, double> {
        for (const auto& [sx, y] : y_at_cutoff)
            if (sx == x) return y;
        return {0.0, 0.0};
    };
    if (res.report.range_size > 0) {
        auto left = y_start(res.report.range_lo);
        auto right = y_start(res.report.range_hi);
        res.report.boundary_y_increment = (s.y_plus(res.report.range_lo) - left.first) +
                                          (s.y_minus(res.report.range_hi) - right.second);
    }
    res.ynpm_residual = check_ynpm(s, cache);
    res.final_pos = s.pos();
    return res;
}

}  // namespace vrw
