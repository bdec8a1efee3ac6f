#pragma once

#include <cstdint>
#include <vector>

#include "vrw/common.hpp"
#include "vrw/rng.hpp"
#include "vrw/weights.hpp"

namespace vrw {

/// Two-color urn drawing color c with probability w(#c)/(w(#red)+w(#blue)),
/// starting from R_0 = B_0 = 0. mhat tracks W(R_n) - W(B_n); y_red/y_blue are
/// the per-color partial sums whose (k+1)-th draw contributes 1/w(k), k being
/// the total draw index (not the color count).
struct UrnState {
    std::uint64_t r = 0;
    std::uint64_t b = 0;
    std::uint64_t n = 0;
    double mhat = 0.0;
    KahanSum y_red;
    KahanSum y_blue;
    std::uint64_t sign_changes = 0;
    int last_sign = 0;  // sign of mhat at the last step where it was nonzero
};

/// One draw. The red probability uses the pre-draw counts; mhat is updated
/// incrementally by the 1/w increment of the drawn color's W partial sum.
inline void urn_step(UrnState& s, const WCache& cache, Rng& rng) {
    const WeightFunction& wf = cache.weight();
    double wr = wf.at(s.r);
    double wb = wf.at(s.b);
    bool red = rng.uniform() * (wr + wb) < wr;
    double yinc = 1.0 / wf.at(s.n);
    if (red) {
        s.mhat += 1.0 / wr;
        s.y_red += yinc;
        ++s.r;
    } else {
        s.mhat -= 1.0 / wb;
        s.y_blue += yinc;
        ++s.b;
    }
    ++s.n;
    int sign = s.mhat > 0 ? 1 : (s.mhat < 0 ? -1 : 0);
    if (sign != 0) {
        if (s.last_sign != 0 && sign != s.last_sign) ++s.sign_changes;
        s.last_sign = sign;
    }
}

struct UrnSnapshot {
    std::uint64_t n, r, b;
    double mhat, y_red, y_blue;
    std::uint64_t sign_changes;
};

inline UrnSnapshot snapshot(const UrnState& s) {
    return {s.n, s.r, s.b, s.mhat, s.y_red.value(), s.y_blue.value(), s.sign_changes};
}

/// Direct simulation; snapshots every `cadence` draws (0 = final state only).
inline std::vector<UrnSnapshot> urn_run_direct(UrnState& s, const WCache& cache,
                                               std::uint64_t n_draws, Rng& rng,
                                               std::uint64_t cadence = 0) {
    std::vector<UrnSnapshot> trace;
    for (std::uint64_t i = 0; i < n_draws; ++i) {
        urn_step(s, cache, rng);
        if (cadence != 0 && s.n % cadence == 0) trace.push_back(snapshot(s));
    }
    trace.push_back(snapshot(s));
    return trace;
}

/// Exponential-embedding simulation: a red ball at each t_k = sum xi_j/w(j)
/// and a blue ball at each t'_k, merged by time. Memorylessness makes the
/// induced draw sequence law match the direct rule. Exact ties are counted
/// and broken toward red.
inline std::vector<UrnSnapshot> urn_run_rubin(UrnState& s, const WCache& cache,
                                              std::uint64_t n_draws, Rng& rng,
                                              std::uint64_t* tie_count = nullptr,
                                              std::uint64_t cadence = 0) {
    const WeightFunction& wf = cache.weight();
    std::vector<UrnSnapshot> trace;
    KahanSum t_red, t_blue;
    t_red += rng.exponential() / wf.at(0);
    t_blue += rng.exponential() / wf.at(0);
    for (std::uint64_t i = 0; i < n_draws; ++i) {
        bool red = t_red.value() <= t_blue.value();
        if (tie_count && t_red.value() == t_blue.value()) ++*tie_count;
        double yinc = 1.0 / wf.at(s.n);
        if (red) {
            s.mhat += 1.0 / wf.at(s.r);
            s.y_red += yinc;
            ++s.r;
            t_red += rng.exponential() / wf.at(s.r);
        } else {
            s.mhat -= 1.0 / wf.at(s.b);
            s.y_blue += yinc;
            ++s.b;
            t_blue += rng.exponential() / wf.at(s.b);
        }
        ++s.n;
        int sign = s.mhat > 0 ? 1 : (s.mhat < 0 ? -1 : 0);
        if (sign != 0) {
            if (s.last_sign != 0 && sign != s.last_sign) ++s.sign_changes;
            s.last_sign = sign;
        }
        if (cadence != 0 && s.n % cadence == 0) trace.push_back(snapshot(s));
    }
    trace.push_back(snapshot(s));
    return trace;
}

/// mhat at the horizon, as a sample proxy of the urn martingale's limit.
inline double mhat_limit_sample(const WCache& cache, std::uint64_t horizon, Rng& rng) {
    UrnState s;
    for (std::uint64_t i = 0; i < horizon; ++i) urn_step(s, cache, rng);
    return s.mhat;
}

/// A color is "frozen" over the final window [n/10, n] if it received no
/// draws there: a crisp finite-horizon proxy for R or B staying bounded.
struct FrozenColorReport {
    bool red_frozen = false;
    bool blue_frozen = false;
};

inline FrozenColorReport detect_frozen_color(const std::vector<UrnSnapshot>& trace) {
    FrozenColorReport rep;
    if (trace.size() < 2) return rep;
    const UrnSnapshot& last = trace.back();
    std::uint64_t window_start = last.n / 10;
    // find the first snapshot at or after the window start
    for (const auto& s : trace) {
        if (s.n >= window_start) {
            rep.red_frozen = (s.r == last.r);
            rep.blue_frozen = (s.b == last.b);
            break;
        }
    }
    return rep;
}

}  // namespace vrw
