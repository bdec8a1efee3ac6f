// Independent reference computations used by the test suite. These are
// deliberately naive re-derivations (direct enumeration, long-double
// arithmetic) so that agreement with the library is meaningful.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "vrw/weights.hpp"

namespace oracles {

/// Exact probability of each depth-d +-1 path of the reinforced walk from the
/// trivial configuration, by enumeration with full local-time bookkeeping.
/// Path index bit k (from the least significant) = 1 means step k goes right.
inline std::vector<double> walk_path_law(const vrw::WeightFunction& wf, int depth) {
    std::vector<double> probs(std::size_t(1) << depth, 0.0);
    struct Frame {
        std::map<long, std::uint64_t> z;
        long pos;
        double p;
        int step;
        std::size_t index;
    };
    std::vector<Frame> stack;
    stack.push_back({{{0, 1}}, 0, 1.0, 0, 0});
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        if (f.step == depth) {
            probs[f.index] = f.p;
            continue;
        }
        auto zat = [&](long x) {
            auto it = f.z.find(x);
            return it == f.z.end() ? std::uint64_t(0) : it->second;
        };
        double wr = wf.at(zat(f.pos + 1));
        double wl = wf.at(zat(f.pos - 1));
        for (int dir : {+1, -1}) {
            Frame g = f;
            g.pos += dir;
            g.z[g.pos] += 1;
            g.p *= (dir > 0 ? wr : wl) / (wr + wl);
            g.step += 1;
            if (dir > 0) g.index |= std::size_t(1) << f.step;
            stack.push_back(g);
        }
    }
    return probs;
}

/// Exact law of the red count after n draws of the w-urn from (0, 0).
inline std::vector<double> urn_red_count_law(const vrw::WeightFunction& wf, int n) {
    // state law over (r, b) with r + b = k
    std::map<std::pair<int, int>, double> law{{{0, 0}, 1.0}};
    for (int k = 0; k < n; ++k) {
        std::map<std::pair<int, int>, double> next;
        for (const auto& [rb, p] : law) {
            double wr = wf.at(std::uint64_t(rb.first));
            double wb = wf.at(std::uint64_t(rb.second));
            next[{rb.first + 1, rb.second}] += p * wr / (wr + wb);
            next[{rb.first, rb.second + 1}] += p * wb / (wr + wb);
        }
        law = std::move(next);
    }
    std::vector<double> out(std::size_t(n) + 1, 0.0);
    for (const auto& [rb, p] : law) out[std::size_t(rb.first)] = p;
    return out;
}

/// Exact probability of each depth-d draw sequence of the w-urn (bit k = 1
/// means draw k is red).
inline std::vector<double> urn_path_law(const vrw::WeightFunction& wf, int depth) {
    std::vector<double> probs(std::size_t(1) << depth, 1.0);
    for (std::size_t path = 0; path < probs.size(); ++path) {
        int r = 0, b = 0;
        double p = 1.0;
        for (int k = 0; k < depth; ++k) {
            double wr = wf.at(std::uint64_t(r));
            double wb = wf.at(std::uint64_t(b));
            if (path >> k & 1) {
                p *= wr / (wr + wb);
                ++r;
            } else {
                p *= wb / (wr + wb);
                ++b;
            }
        }
        probs[path] = p;
    }
    return probs;
}

/// Long-double prefix sum of 1/w, the reference for the compensated table.
inline long double naive_prefix_sum(const vrw::WeightFunction& wf, std::uint64_t n) {
    long double s = 0.0L;
    for (std::uint64_t k = 0; k < n; ++k) s += 1.0L / static_cast<long double>(wf.at(k));
    return s;
}

}  // namespace oracles
