#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vrw {

inline constexpr const char* kVersion = "0.1.0";

/// Thrown when W^{-1}(y) is requested beyond the total mass of a bounded W,
/// i.e. when sum 1/w(n) converges and y >= W(infinity).
struct OutOfRangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a cache or walk would exceed its configured memory budget.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t position)
        : std::runtime_error(msg + " (at position " + std::to_string(position) + ")"),
          pos(position) {}
    std::size_t pos;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Kahan-Neumaier compensated accumulator. Terms as small as 1/w(1e8)
/// must not vanish against a large running sum.
class KahanSum {
public:
    KahanSum() = default;
    explicit KahanSum(double v) : sum_(v) {}

    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

    KahanSum& operator+=(double x) {
        add(x);
        return *this;
    }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace vrw
