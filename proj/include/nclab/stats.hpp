#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace nclab {

inline double mean(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

// Sample standard deviation (n-1 denominator). Zero for singletons.
inline double stddev(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

namespace detail {

// Continued-fraction evaluation for the regularized incomplete beta function
// (Lentz's algorithm).
inline double beta_cont_frac(double a, double b, double x) {
    constexpr double tiny = 1e-30;
    constexpr double eps = 1e-15;
    constexpr int max_iter = 500;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

}  // namespace detail

// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log(1.0 - x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::beta_cont_frac(a, b, x) / a;
    return 1.0 - bt * detail::beta_cont_frac(b, a, 1.0 - x) / b;
}

// P(T <= t) for Student's t with df degrees of freedom.
inline double student_t_cdf(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("student_t_cdf: df must be positive");
    if (t == 0.0) return 0.5;
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t > 0.0 ? 1.0 - tail : tail;
}

struct TTestResult {
    double t = 0.0;
    double p = 1.0;  // one-sided, alternative: mean(after) > mean(before)
    int df = 0;
    bool degenerate = false;  // paired differences had zero variance
};

// One-sided paired t-test of after > before. With zero-variance differences
// the p-value collapses to 0 / 0.5 / 1 by the sign of the mean difference,
// flagged as degenerate.
inline TTestResult paired_t_test(const std::vector<double>& after,
                                 const std::vector<double>& before) {
    if (after.size() != before.size()) throw std::invalid_argument("paired_t_test: length mismatch");
    if (after.size() < 2) throw std::invalid_argument("paired_t_test: need at least 2 pairs");
    const std::size_t n = after.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = after[i] - before[i];
    const double md = mean(diff);
    const double sd = stddev(diff);
    TTestResult r;
    r.df = static_cast<int>(n) - 1;
    if (sd == 0.0) {
        r.degenerate = true;
        r.t = md > 0.0 ? std::numeric_limits<double>::infinity()
                       : (md < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
        r.p = md > 0.0 ? 0.0 : (md < 0.0 ? 1.0 : 0.5);
        return r;
    }
    r.t = md / (sd / std::sqrt(static_cast<double>(n)));
    r.p = 1.0 - student_t_cdf(r.t, static_cast<double>(r.df));
    return r;
}

// Star rating: *** if p < 0.001, ** if p < 0.01, * if p < 0.05.
inline std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

}  // namespace nclab
