#ifndef KSEG_LOGMATH_HPP
#define KSEG_LOGMATH_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace kseg {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : neg_inf; }

/// Max-shifted log-sum-exp; returns -inf for an empty or all -inf range.
inline double log_sum_exp(std::span<const double> values) {
    double top = neg_inf;
    for (double v : values) top = std::max(top, v);
    if (top == neg_inf) return neg_inf;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - top);
    return top + std::log(acc);
}

inline double log_add_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// Scores within this relative distance count as tied, so that rounding in
/// the order of summation cannot pick between mathematically equal paths.
inline constexpr double score_tie_tolerance = 1e-12;

/// +1 when `a` is clearly the better log score, -1 when `b` is, 0 on a tie.
inline int compare_scores(double a, double b) {
    if (a == b) return 0;
    if (a == neg_inf) return -1;
    if (b == neg_inf) return 1;
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    if (std::abs(a - b) <= score_tie_tolerance * scale) return 0;
    return a > b ? 1 : -1;
}

} // namespace kseg

#endif
