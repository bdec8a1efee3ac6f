#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "vrw/common.hpp"
#include "vrw/rng.hpp"
#include "vrw/walk.hpp"
#include "vrw/weights.hpp"

namespace vrw {

/// Deterministic clock-duration table xi_k^{+-}(y), derived counter-style
/// from a seed so that coupled runs read identical entries without shared
/// mutable state. One distinguished entry (site `free_site`, direction +,
/// index 0) can be overridden with the coupling parameter u; reflecting
/// boundaries are realized by infinite entries at (a, -, 0) and (b, +, 0)
/// (a frozen first clock never fires, so later indices are never read).
class FixedRandomness {
public:
    explicit FixedRandomness(std::uint64_t seed) : seed_(seed) {}

    /// All entries equal to `v` (degenerate fixture for tie handling tests).
    static FixedRandomness constant(double v) {
        FixedRandomness f(0);
        f.const_value_ = v;
        return f;
    }

    void set_free_parameter(long site, double u) {
        free_site_ = site;
        free_u_ = u;
    }

    void freeze(long site, int dir) { frozen_.push_back({site, dir}); }

    double xi(long y, int dir, std::uint64_t k) const {
        for (const auto& [fs, fd] : frozen_)
            if (fs == y && fd == dir) return std::numeric_limits<double>::infinity();
        if (free_site_ && *free_site_ == y && dir > 0 && k == 0) return free_u_;
        if (const_value_) return *const_value_;
        std::uint64_t zz = static_cast<std::uint64_t>(y >= 0 ? 2 * y : -2 * y - 1);
        std::uint64_t bits = mix64(seed_, mix64(zz * 2 + (dir > 0 ? 1 : 0), k));
        double u01 = u01_from_bits(bits);
        return -std::log(1.0 - u01);
    }

private:
    std::uint64_t seed_;
    std::optional<double> const_value_;
    std::optional<long> free_site_;
    double free_u_ = 0.0;
    std::vector<std::pair<long, int>> frozen_;
};

/// Bookkeeping for one oriented edge (site, +-1). A clock is paused with its
/// remaining ring time in `residual`; `fired` counts completed jumps (the xi
/// index of the next fresh clock); conservation: started = consumed +
/// residual at all times, exact up to rounding.
struct EdgeClock {
    bool live = false;        // a clock exists (paused or racing)
    double residual = 0.0;    // remaining ring time of the existing clock
    std::uint64_t fired = 0;  // N(x, x+-1)
    double last_duration = 0.0;  // full duration of the current clock
    KahanSum started;         // sum of full durations of all clocks started
    KahanSum consumed;        // total time this edge's clocks have ticked
    KahanSum t_fired;         // sum of full durations of fired clocks (T_x^+-)
};

struct TimelineSite {
    std::uint64_t z = 0;  // local time, includes z0 and the time-0 origin visit
    EdgeClock minus, plus;
};

/// State of the clock-race construction. The discrete path induced by the
/// jump sequence has the same law as the direct walk when the durations are
/// unit exponentials: while the walk sits at x both neighbour-facing clocks
/// tick, their remaining times are exponential with rates w(Z(x-1)), w(Z(x+1))
/// by memorylessness, and neighbour local times cannot change while the walk
/// is away, so the race odds match the direct transition rule.
class TimelineState {
public:
    TimelineState(const WeightFunction& wf, const FixedRandomness& xi,
                  const InitialConfig& config, Boundary boundary)
        : wf_(wf), xi_(&xi), config_(config), boundary_(boundary), pos_(config.origin) {
        for (const auto& [x, c] : config.z0) touch(x);
        touch(pos_).z += 1;
        // first two clocks at the origin, rated by the neighbours' z0 counts
        start_clock(pos_, -1);
        start_clock(pos_, +1);
    }

    long pos() const { return pos_; }
    std::uint64_t steps() const { return n_; }
    double sim_time() const { return sim_time_.value(); }
    std::uint64_t tie_count() const { return ties_; }

    std::uint64_t z(long x) const {
        auto it = sites_.find(x);
        return it == sites_.end() ? config_.at(x) : it->second.z;
    }
    std::uint64_t jumps(long x, int dir) const {
        auto it = sites_.find(x);
        if (it == sites_.end()) return 0;
        return (dir > 0 ? it->second.plus : it->second.minus).fired;
    }
    double y_pm(long x, int dir) const {
        auto it = y_.find({x, dir});
        return it == y_.end() ? 0.0 : it->second.value();
    }
    double t_consumed(long x, int dir) const {
        auto it = sites_.find(x);
        if (it == sites_.end()) return 0.0;
        return (dir > 0 ? it->second.plus : it->second.minus).t_fired.value();
    }
    double live_residual(long x, int dir) const {
        auto it = sites_.find(x);
        if (it == sites_.end()) return 0.0;
        const EdgeClock& e = dir > 0 ? it->second.plus : it->second.minus;
        return e.live ? e.residual : 0.0;
    }

    /// Max |started - consumed - residual| over all oriented edges, relative
    /// to the started total.
    double conservation_residual() const {
        double worst = 0.0;
        for (const auto& [x, s] : sites_) {
            for (const EdgeClock* e : {&s.minus, &s.plus}) {
                double started = e->started.value();
                if (started == 0.0 || !std::isfinite(started)) continue;
                double gap = std::abs(started - e->consumed.value() -
                                      (e->live ? e->residual : 0.0));
                worst = std::max(worst, gap / std::max(1.0, started));
            }
        }
        return worst;
    }

    /// One clock race. Returns the jump direction. Exact ties are counted
    /// and broken toward the right edge.
    int step() {
        TimelineSite& here = touch(pos_);
        if (!here.minus.live || !here.plus.live)
            throw ConfigError("TimelineState: live clock missing (internal)");
        double tl = here.minus.residual;
        double tr = here.plus.residual;
        if (tl == tr) ++ties_;
        int dir = tr <= tl ? +1 : -1;
        EdgeClock& winner = dir > 0 ? here.plus : here.minus;
        EdgeClock& loser = dir > 0 ? here.minus : here.plus;
        double elapsed = winner.residual;
        sim_time_ += elapsed;
        winner.consumed += elapsed;
        if (std::isfinite(loser.residual)) {
            loser.consumed += elapsed;
            loser.residual -= elapsed;
            if (loser.residual <= 0.0) loser.residual = std::numeric_limits<double>::min();
        }
        winner.residual = 0.0;
        winner.live = false;
        winner.t_fired += winner.last_duration;
        winner.fired += 1;
        // Y increment: 1/w(Z of the target before arrival)
        long target = pos_ + dir;
        y_[{pos_, dir}] += 1.0 / wf_.at(z(target));
        // arrival bookkeeping: fresh clock back toward the source, resume or
        // first-start the forward clock
        long src = pos_;
        pos_ = target;
        ++n_;
        TimelineSite& there = touch(pos_);
        start_clock(pos_, -dir);
        EdgeClock& fwd = dir > 0 ? there.plus : there.minus;
        if (!fwd.live) {
            // a fired forward clock is always refreshed at the intervening
            // opposite-side arrival, so a missing clock means a first start
            if (fwd.started.value() != 0.0)
                throw ConfigError("TimelineState: stale forward clock (internal)");
            start_clock(pos_, dir);
        }
        there.z += 1;
        (void)src;
        return dir;
    }

private:
    TimelineSite& touch(long x) {
        auto [it, fresh] = sites_.try_emplace(x);
        if (fresh) it->second.z = config_.at(x);
        return it->second;
    }

    void start_clock(long x, int dir) {
        TimelineSite& s = touch(x);
        EdgeClock& e = dir > 0 ? s.plus : s.minus;
        double rate = wf_.at(z(x + dir));
        double duration = xi_->xi(x, dir, e.fired) / rate;
        e.residual = duration;
        e.last_duration = duration;
        e.live = true;
        if (std::isfinite(duration)) e.started += duration;
    }

    const WeightFunction& wf_;
    const FixedRandomness* xi_;
    InitialConfig config_;
    Boundary boundary_;
    long pos_;
    std::uint64_t n_ = 0;
    std::uint64_t ties_ = 0;
    KahanSum sim_time_;
    std::map<long, TimelineSite> sites_;
    std::map<std::pair<long, int>, KahanSum> y_;
};

/// Reflecting boundaries as infinite first clocks on the outward edges.
inline FixedRandomness with_boundary(FixedRandomness xi, Boundary boundary) {
    if (boundary.kind == Boundary::Reflect) {
        xi.freeze(boundary.a, -1);
        xi.freeze(boundary.b, +1);
    }
    return xi;
}

struct TimelineRunResult {
    std::vector<long> path;  // positions X_0..X_steps
    std::uint64_t ties = 0;
    double sim_time = 0.0;
    double conservation_residual = 0.0;
};

inline TimelineRunResult timeline_run(const WeightFunction& wf, const FixedRandomness& xi,
                                      const InitialConfig& config, Boundary boundary,
                                      std::uint64_t steps, bool record_path = true) {
    TimelineState s(wf, xi, config, boundary);
    TimelineRunResult res;
    if (record_path) {
        res.path.reserve(steps + 1);
        res.path.push_back(s.pos());
    }
    for (std::uint64_t k = 0; k < steps; ++k) {
        s.step();
        if (record_path) res.path.push_back(s.pos());
    }
    res.ties = s.tie_count();
    res.sim_time = s.sim_time();
    res.conservation_residual = s.conservation_residual();
    return res;
}

/// Per-visit and per-jump observables of one construction run, recorded at
/// matched indices for the monotone-coupling comparisons.
struct CouplingTrace {
    // per site y, per visit k: (Z(y+1), Z(y-1), N(y,y+1), N(y,y-1)) at the visit
    std::map<long, std::vector<std::array<std::uint64_t, 4>>> at_visit;
    // per site y: Y+(y) after the k-th plus-jump / Y-(y) after the k-th minus-jump
    std::map<long, std::vector<double>> y_plus_at_jump;
    std::map<long, std::vector<double>> y_minus_at_jump;
    std::uint64_t ties = 0;
};

inline CouplingTrace timeline_run_recorded(const WeightFunction& wf, const FixedRandomness& xi,
                                           const InitialConfig& config, Boundary boundary,
                                           std::uint64_t steps) {
    TimelineState s(wf, xi, config, boundary);
    CouplingTrace tr;
    auto record_visit = [&](long y) {
        tr.at_visit[y].push_back(
            {s.z(y + 1), s.z(y - 1), s.jumps(y, +1), s.jumps(y, -1)});
    };
    record_visit(s.pos());
    for (std::uint64_t k = 0; k < steps; ++k) {
        long from = s.pos();
        int dir = s.step();
        if (dir > 0)
            tr.y_plus_at_jump[from].push_back(s.y_pm(from, +1));
        else
            tr.y_minus_at_jump[from].push_back(s.y_pm(from, -1));
        record_visit(s.pos());
    }
    tr.ties = s.tie_count();
    return tr;
}

struct CouplingViolations {
    std::uint64_t z_right = 0, z_left = 0;   // local-time comparisons at matched visits
    std::uint64_t n_right = 0, n_left = 0;   // jump-count comparisons at matched visits
    std::uint64_t y_plus = 0, y_minus = 0;   // Y comparisons at matched jump indices
    std::uint64_t compared = 0;
    bool tie_invalidated = false;

    std::uint64_t total() const {
        return z_right + z_left + n_right + n_left + y_plus + y_minus;
    }
};

/// Checks the monotone-coupling inequalities between the runs for parameters
/// u <= u' sharing one randomness table: at the matched k-th visit to y,
/// Z(y+1) >= Z'(y+1), Z(y-1) <= Z'(y-1), N(y,y+1) >= N'(y,y+1),
/// N(y,y-1) <= N'(y,y-1); at the matched k-th jump, Y+ <= Y'+ and Y- >= Y'-.
/// `flip` reverses all six (the restricted-interval comparison runs the same
/// check with the roles exchanged). Y comparisons allow `y_tol` of float slop
/// because the two runs accumulate the sums in different orders.
inline CouplingViolations compare_coupling(const CouplingTrace& small_u,
                                           const CouplingTrace& big_u, bool flip = false,
                                           double y_tol = 1.0e-12) {
    CouplingViolations v;
    if (small_u.ties > 0 || big_u.ties > 0) v.tie_invalidated = true;
    auto le = [&](std::uint64_t a, std::uint64_t b) { return a <= b; };
    for (const auto& [y, seq] : small_u.at_visit) {
        auto it = big_u.at_visit.find(y);
        if (it == big_u.at_visit.end()) continue;
        std::size_t k = std::min(seq.size(), it->second.size());
        for (std::size_t i = 0; i < k; ++i) {
            const auto& a = seq[i];
            const auto& b = it->second[i];
            bool zr = flip ? le(a[0], b[0]) : le(b[0], a[0]);  // Z(y+1): a >= b
            bool zl = flip ? le(b[1], a[1]) : le(a[1], b[1]);  // Z(y-1): a <= b
            bool nr = flip ? le(a[2], b[2]) : le(b[2], a[2]);  // N(y,+): a >= b
            bool nl = flip ? le(b[3], a[3]) : le(a[3], b[3]);  // N(y,-): a <= b
            if (!zr) ++v.z_right;
            if (!zl) ++v.z_left;
            if (!nr) ++v.n_right;
            if (!nl) ++v.n_left;
            ++v.compared;
        }
    }
    auto cmp_y = [&](const std::map<long, std::vector<double>>& sa,
                     const std::map<long, std::vector<double>>& sb, bool a_le_b,
                     std::uint64_t& out) {
        for (const auto& [y, seq] : sa) {
            auto it = sb.find(y);
            if (it == sb.end()) continue;
            std::size_t k = std::min(seq.size(), it->second.size());
            for (std::size_t i = 0; i < k; ++i) {
                double a = seq[i], b = it->second[i];
                bool ok = a_le_b ? a <= b + y_tol : a + y_tol >= b;
                if (!ok) ++out;
                ++v.compared;
            }
        }
    };
    // Y+ : small <= big; Y- : small >= big (flipped for restricted couplings)
    cmp_y(small_u.y_plus_at_jump, big_u.y_plus_at_jump, !flip, v.y_plus);
    cmp_y(small_u.y_minus_at_jump, big_u.y_minus_at_jump, flip, v.y_minus);
    return v;
}

/// Same-randomness runs on nested reflecting intervals [a,b] and [a,b2]
/// (b2 >= b), started at a. Extending the interval rightward reverses every
/// monotone comparison relative to the free-parameter coupling, so the
/// traces are compared with the roles exchanged.
inline CouplingViolations couple_restriction(const WeightFunction& wf, long a, long b, long b2,
                                             std::uint64_t seed, std::uint64_t steps) {
    if (!(a <= b && b <= b2)) throw ConfigError("couple_restriction: need a <= b <= b2");
    InitialConfig config;
    config.origin = a;
    Boundary small = Boundary::reflect(a, b);
    Boundary big = Boundary::reflect(a, b2);
    FixedRandomness xi_small = with_boundary(FixedRandomness(seed), small);
    FixedRandomness xi_big = with_boundary(FixedRandomness(seed), big);
    CouplingTrace t_small = timeline_run_recorded(wf, xi_small, config, small, steps);
    CouplingTrace t_big = timeline_run_recorded(wf, xi_big, config, big, steps);
    return compare_coupling(t_small, t_big, /*flip=*/true);
}

/// Runs the construction once per u over one shared randomness table with
/// xi_0^+(x) = u, and reports the monotone-coupling comparisons between
/// consecutive members (us must be sorted ascending).
inline std::vector<CouplingViolations> couple_family(const WeightFunction& wf, long x,
                                                     const std::vector<double>& us,
                                                     std::uint64_t seed, std::uint64_t steps,
                                                     Boundary boundary = Boundary::free_line()) {
    if (!wf.non_decreasing())
        throw ConfigError("couple_family: requires a non-decreasing weight");
    for (std::size_t i = 1; i < us.size(); ++i)
        if (!(us[i - 1] <= us[i])) throw ConfigError("couple_family: us must be ascending");
    InitialConfig config;
    std::vector<CouplingTrace> traces;
    for (double u : us) {
        FixedRandomness xi = with_boundary(FixedRandomness(seed), boundary);
        xi.set_free_parameter(x, u);
        traces.push_back(timeline_run_recorded(wf, xi, config, boundary, steps));
    }
    std::vector<CouplingViolations> out;
    for (std::size_t i = 1; i < traces.size(); ++i)
        out.push_back(compare_coupling(traces[i - 1], traces[i]));
    return out;
}

}  // namespace vrw
