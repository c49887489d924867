#ifndef TRANSPORT_SPECIAL_HPP
#define TRANSPORT_SPECIAL_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace transport {

// eta (eta-1) ... (eta-n+1); zero when n > eta.
inline double falling_factorial(long long eta, int n) {
    if (n < 0) throw std::invalid_argument("falling_factorial: negative order");
    if (n > eta) return 0.0;
    double out = 1.0;
    for (int m = 0; m < n; ++m) out *= static_cast<double>(eta - m);
    return out;
}

// Gamma(a + n) / Gamma(a) = a (a+1) ... (a+n-1).
inline double rising_factorial(double a, int n) {
    double out = 1.0;
    for (int m = 0; m < n; ++m) out *= a + m;
    return out;
}

inline double log_binomial(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Composite Simpson on a uniform grid; requires an odd number of points.
inline double simpson(std::span<const double> values, double h) {
    const std::size_t n = values.size();
    if (n < 3 || n % 2 == 0) throw std::invalid_argument("simpson: need odd point count >= 3");
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 1; i + 1 < n; i += 2) odd += values[i];
    for (std::size_t i = 2; i + 1 < n; i += 2) even += values[i];
    return h / 3.0 * (values.front() + values.back() + 4.0 * odd + 2.0 * even);
}

// Regularized lower incomplete gamma P(a, x) by series / continued fraction.
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term, ap = a;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Lentz continued fraction for Q(a, x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    const double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

// Survival function of chi-square with df degrees of freedom.
inline double chi_square_sf(double statistic, double df) {
    return 1.0 - gamma_p(df / 2.0, statistic / 2.0);
}

inline double sqr(double x) { return x * x; }

// Kahan accumulator, used where long sums must not drift.
class CompensatedSum {
  public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

  private:
    double s_ = 0.0;
    double c_ = 0.0;
};

}  // namespace transport

#endif
