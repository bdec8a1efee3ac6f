#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vrw/common.hpp"

namespace vrw {

enum class WeightKind { Constant, Linear, Poly, NLogN, NLogLogN, FactorialStep, Table };

enum class MassStatus { Divergent, PossiblyBounded };

/// A positive weight sequence w(n), extended to the reals by w(t) = w(floor t).
/// Immutable and freely shareable.
class WeightFunction {
public:
    static WeightFunction constant(double v) {
        check(v > 0, "const: value must be positive");
        WeightFunction w(WeightKind::Constant);
        w.a_ = v;
        return w;
    }

    /// w(n) = slope*n + offset.
    static WeightFunction linear(double slope, double offset) {
        check(offset > 0, "linear: offset must be positive");
        check(slope >= 0, "linear: slope must be non-negative");
        WeightFunction w(WeightKind::Linear);
        w.a_ = slope;
        w.b_ = offset;
        return w;
    }

    /// w(n) = (n + offset)^p.
    static WeightFunction poly(double p, double offset) {
        check(offset > 0, "poly: offset must be positive");
        WeightFunction w(WeightKind::Poly);
        w.a_ = p;
        w.b_ = offset;
        w.non_decreasing_ = p >= 0;
        return w;
    }

    /// w(n) = (n + offset) * log(n + offset + 1).
    static WeightFunction nlogn(double offset) {
        check(offset > 0, "nlogn: offset must be positive");
        WeightFunction w(WeightKind::NLogN);
        w.b_ = offset;
        return w;
    }

    /// w(n) = c * (n + offset) * log log(n + offset). Needs offset > e.
    static WeightFunction nloglog(double c, double offset) {
        check(c > 0, "nloglog: scale must be positive");
        check(offset > std::exp(1.0), "nloglog: offset must exceed e");
        WeightFunction w(WeightKind::NLogLogN);
        w.a_ = c;
        w.b_ = offset;
        return w;
    }

    /// w(x) = (n!)^2 for x in [((n-1)!)^2, (n!)^2); w(x) = 1 below x = 1.
    static WeightFunction factorial_step() { return WeightFunction(WeightKind::FactorialStep); }

    /// Finite list, constant extension at the last value past the end.
    static WeightFunction table(std::vector<double> values) {
        check(!values.empty(), "table: empty value list");
        for (double v : values) check(v > 0, "table: values must be positive");
        WeightFunction w(WeightKind::Table);
        w.non_decreasing_ = std::is_sorted(values.begin(), values.end());
        w.table_ = std::make_shared<std::vector<double>>(std::move(values));
        return w;
    }

    static WeightFunction table_from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("table: cannot open " + path);
        std::vector<double> vals;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            vals.push_back(std::stod(line));
        }
        WeightFunction w = table(std::move(vals));
        w.table_path_ = path;
        return w;
    }

    WeightKind kind() const { return kind_; }
    bool non_decreasing() const { return non_decreasing_; }

    /// w at an integer index.
    double at(std::uint64_t n) const {
        switch (kind_) {
            case WeightKind::Constant:
                return a_;
            case WeightKind::Linear:
                return a_ * static_cast<double>(n) + b_;
            case WeightKind::Poly:
                return std::pow(static_cast<double>(n) + b_, a_);
            case WeightKind::NLogN: {
                double x = static_cast<double>(n) + b_;
                return x * std::log(x + 1.0);
            }
            case WeightKind::NLogLogN: {
                double x = static_cast<double>(n) + b_;
                return a_ * x * std::log(std::log(x));
            }
            case WeightKind::FactorialStep:
                return factorial_step_at(static_cast<double>(n));
            case WeightKind::Table: {
                const auto& t = *table_;
                return n < t.size() ? t[n] : t.back();
            }
        }
        return 0.0;  // unreachable
    }

    /// w extended by floor to the nonnegative reals.
    double operator()(double t) const { return at(static_cast<std::uint64_t>(std::floor(t))); }

    /// Analytic status of sum 1/w(n). Only Poly with p > 1 can have finite mass;
    /// every other family (including Table, whose tail is constant) diverges.
    MassStatus mass_status() const {
        if (kind_ == WeightKind::Poly && a_ > 1.0) return MassStatus::PossiblyBounded;
        return MassStatus::Divergent;
    }

    /// Upper bound on sum_{n>=N} 1/w(n) when the family admits one.
    std::optional<double> tail_mass_bound(std::uint64_t n0) const {
        if (kind_ == WeightKind::Poly && a_ > 1.0 && n0 >= 1) {
            double base = static_cast<double>(n0) - 1.0 + b_;
            return std::pow(base, 1.0 - a_) / (a_ - 1.0);
        }
        return std::nullopt;
    }

    /// Checks w(n+1) >= w(n) up to a probe bound (Table checked exactly).
    bool verify_non_decreasing(std::uint64_t probe_bound = 1u << 16) const {
        if (kind_ == WeightKind::Table) return non_decreasing_;
        double prev = at(0);
        for (std::uint64_t n = 1; n <= probe_bound; ++n) {
            double cur = at(n);
            if (cur < prev) return false;
            prev = cur;
        }
        return non_decreasing_;
    }

    std::string format() const {
        std::ostringstream os;
        os.precision(15);
        switch (kind_) {
            case WeightKind::Constant: os << "const:" << a_; break;
            case WeightKind::Linear: os << "linear:" << a_ << "," << b_; break;
            case WeightKind::Poly: os << "poly:" << a_ << "," << b_; break;
            case WeightKind::NLogN: os << "nlogn:" << b_; break;
            case WeightKind::NLogLogN: os << "nloglog:" << a_ << "," << b_; break;
            case WeightKind::FactorialStep: os << "factorial-step"; break;
            case WeightKind::Table: os << "table:" << table_path_; break;
        }
        return os.str();
    }

    /// Pointwise scale: lambda * w. Used by the I_alpha scaling identity.
    WeightFunction scaled(double lambda) const {
        check(lambda > 0, "scale factor must be positive");
        if (kind_ == WeightKind::Table) {
            std::vector<double> t = *table_;
            for (double& v : t) v *= lambda;
            return table(std::move(t));
        }
        WeightFunction w = *this;
        switch (kind_) {
            case WeightKind::Constant: w.a_ *= lambda; break;
            case WeightKind::Linear:
                w.a_ *= lambda;
                w.b_ *= lambda;
                break;
            case WeightKind::NLogLogN: w.a_ *= lambda; break;
            default:
                throw ConfigError("scaled: unsupported for " + format());
        }
        return w;
    }

private:
    explicit WeightFunction(WeightKind k) : kind_(k) {}

    static void check(bool ok, const char* msg) {
        if (!ok) throw ConfigError(msg);
    }

    static double factorial_step_at(double x) {
        double fact = 1.0;  // n!
        for (int n = 1; n < 180; ++n) {
            fact *= n;
            double b = fact * fact;  // (n!)^2
            if (x < b) return b;
        }
        return std::numeric_limits<double>::infinity();
    }

    WeightKind kind_;
    double a_ = 1.0;
    double b_ = 1.0;
    bool non_decreasing_ = true;
    std::shared_ptr<const std::vector<double>> table_;
    std::string table_path_;
};

/// Parses the weight-spec mini-grammar:
///   const:<v> | linear:<slope>,<offset> | poly:<p>,<offset> | nlogn:<offset>
///   | nloglog:<c>,<offset> | factorial-step | table:<path>
/// Omitted numeric arguments take the documented per-family defaults
/// (linear:1,1  nlogn:1  nloglog:1,3  const:1), except poly which requires both.
inline WeightFunction parse_weight_spec(const std::string& s) {
    auto colon = s.find(':');
    std::string head = s.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : s.substr(colon + 1);

    auto parse_args = [&](std::size_t max_args) {
        std::vector<double> args;
        if (rest.empty()) return args;
        std::size_t pos = colon + 1;
        std::stringstream ss(rest);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t used = 0;
                double v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
                args.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("expected a number, got '" + tok + "'", pos);
            }
            pos += tok.size() + 1;
        }
        if (args.size() > max_args)
            throw ParseError("too many arguments for '" + head + "'", colon + 1);
        return args;
    };

    try {
        if (head == "const") {
            auto a = parse_args(1);
            return WeightFunction::constant(a.empty() ? 1.0 : a[0]);
        }
        if (head == "linear") {
            auto a = parse_args(2);
            return WeightFunction::linear(a.size() > 0 ? a[0] : 1.0, a.size() > 1 ? a[1] : 1.0);
        }
        if (head == "poly") {
            auto a = parse_args(2);
            if (a.size() != 2)
                throw ParseError("poly requires <p>,<offset>", colon == std::string::npos ? s.size() : colon + 1);
            return WeightFunction::poly(a[0], a[1]);
        }
        if (head == "nlogn") {
            auto a = parse_args(1);
            return WeightFunction::nlogn(a.empty() ? 1.0 : a[0]);
        }
        if (head == "nloglog") {
            auto a = parse_args(2);
            return WeightFunction::nloglog(a.size() > 0 ? a[0] : 1.0, a.size() > 1 ? a[1] : 3.0);
        }
        if (head == "factorial-step") {
            if (!rest.empty()) throw ParseError("factorial-step takes no arguments", colon + 1);
            return WeightFunction::factorial_step();
        }
        if (head == "table") {
            if (rest.empty()) throw ParseError("table requires a file path", s.size());
            return WeightFunction::table_from_file(rest);
        }
    } catch (const ConfigError& e) {
        throw ParseError(e.what(), 0);
    }
    throw ParseError("unknown weight family '" + head +
                         "' (expected const|linear|poly|nlogn|nloglog|factorial-step|table)",
                     0);
}

/// Growable compensated prefix-sum table S_k = sum_{j<k} 1/w(j).
///
/// Storage is chunked so published entries never move: reads of entries below
/// size() are safe concurrently with extension, extension itself is serialized.
class WCache {
public:
    static constexpr std::size_t kChunkBits = 20;
    static constexpr std::size_t kChunkSize = std::size_t(1) << kChunkBits;
    static constexpr std::size_t kMaxChunks = 256;

    explicit WCache(WeightFunction wf, std::size_t entry_budget = std::size_t(1) << 27)
        : wf_(std::move(wf)), budget_(std::min(entry_budget, kChunkSize * kMaxChunks)) {
        chunks_[0] = std::make_unique<double[]>(kChunkSize);
        chunks_[0][0] = 0.0;  // S_0
        size_.store(1, std::memory_order_release);
    }

    const WeightFunction& weight() const { return wf_; }
    std::size_t size() const { return size_.load(std::memory_order_acquire); }
    MassStatus mass_status() const { return wf_.mass_status(); }

    /// S_k; extends lazily.
    double prefix(std::uint64_t k) {
        if (k >= size()) extend_to(k + 1);
        return entry(k);
    }

    /// W(t) = S_floor(t) + frac(t)/w(floor(t)).
    double big_w(double t) {
        if (t < 0) throw ConfigError("big_w: negative argument");
        auto k = static_cast<std::uint64_t>(std::floor(t));
        double s = prefix(k);
        double frac = t - static_cast<double>(k);
        return frac == 0.0 ? s : s + frac / wf_.at(k);
    }

    /// W^{-1}(y): the unique t with W(t) = y.
    /// Throws OutOfRangeError when the tail bound certifies y >= W(infinity).
    double big_w_inv(double y) {
        if (y < 0) throw ConfigError("big_w_inv: negative argument");
        std::uint64_t k = locate(y);
        return static_cast<double>(k) + (y - entry(k)) * wf_.at(k);
    }

    /// u(x, alpha) = W^{-1}(W(x) + alpha).
    double shift_u(double x, double alpha) {
        if (alpha < 0) throw ConfigError("shift_u: negative alpha");
        return big_w_inv(big_w(x) + alpha);
    }

    /// Largest k with S_k <= y, extending as needed.
    std::uint64_t locate(double y) {
        ensure_covers(y);
        std::size_t n = size();
        // last published entry with S_k <= y
        std::size_t lo = 0, hi = n - 1;
        while (lo < hi) {
            std::size_t mid = (lo + hi + 1) / 2;
            if (entry(mid) <= y)
                lo = mid;
            else
                hi = mid - 1;
        }
        return lo;
    }

    double entry(std::uint64_t k) const {
        return chunks_[k >> kChunkBits][k & (kChunkSize - 1)];
    }

    /// Monotone-argument inverse: cheap repeated W^{-1} for non-decreasing y.
    class InverseCursor {
    public:
        explicit InverseCursor(WCache& c) : cache_(&c) {}

        double operator()(double y) {
            cache_->ensure_covers(y);
            while (k_ + 1 < cache_->size() && cache_->entry(k_ + 1) <= y) ++k_;
            // y can only move forward; a stale k_ below the bracket is impossible
            return static_cast<double>(k_) + (y - cache_->entry(k_)) * cache_->wf_.at(k_);
        }

    private:
        WCache* cache_;
        std::uint64_t k_ = 0;
    };

private:
    /// Extends until some S_k > y, or throws.
    void ensure_covers(double y) {
        while (true) {
            std::size_t n = size();
            if (entry(n - 1) > y) return;
            if (n >= budget_) {
                if (auto tail = wf_.tail_mass_bound(n - 1); tail && entry(n - 1) + *tail <= y)
                    throw OutOfRangeError("W is bounded and y >= W(infinity): " + wf_.format());
                throw ResourceError("WCache budget exhausted inverting y for " + wf_.format());
            }
            // bounded-mass early exit without burning the whole budget
            if (auto tail = wf_.tail_mass_bound(n - 1); tail && entry(n - 1) + *tail <= y)
                throw OutOfRangeError("W is bounded and y >= W(infinity): " + wf_.format());
            extend_to(std::min(budget_, n * 2));
        }
    }

    void extend_to(std::uint64_t want) {
        std::lock_guard<std::mutex> lock(grow_mutex_);
        std::size_t n = size();
        if (want <= n) return;
        if (want > budget_)
            throw ResourceError("WCache budget exceeded for " + wf_.format());
        for (std::size_t k = n; k < want; ++k) {
            std::size_t ci = k >> kChunkBits;
            if (!chunks_[ci]) chunks_[ci] = std::make_unique<double[]>(kChunkSize);
            acc_.add(1.0 / wf_.at(k - 1));
            chunks_[ci][k & (kChunkSize - 1)] = acc_.value();
            size_.store(k + 1, std::memory_order_release);
        }
    }

    WeightFunction wf_;
    std::size_t budget_;
    std::array<std::unique_ptr<double[]>, kMaxChunks> chunks_{};
    std::atomic<std::size_t> size_{0};
    KahanSum acc_;  // running compensated S_k, k = size()-1
    std::mutex grow_mutex_;
};

}  // namespace vrw
