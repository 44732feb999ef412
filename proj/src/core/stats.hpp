#pragma once

#include <cmath>
#include <vector>

#include "core/errors.hpp"

namespace frugal {

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw ParameterError("mean: empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) throw ParameterError("sample_variance: need at least two points");
    double mu = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size() - 1);
}

inline double standard_error(const std::vector<double>& v) {
    return std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

namespace detail {

// Continued-fraction helper for the regularized incomplete beta function.
inline double beta_cf(double a, double b, double x) {
    const int max_iter = 200;
    const double eps = 3e-14;
    const double fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// P(T > t) for Student's t with df degrees of freedom.
inline double student_t_sf(double t, double df) {
    double x = df / (df + t * t);
    double p = 0.5 * detail::incomplete_beta(df / 2.0, 0.5, x);
    return t >= 0.0 ? p : 1.0 - p;
}

struct TwoSampleTest {
    double t = 0.0;
    double df = 0.0;
    double p_one_sided = 0.0;  // H1: mean(a) > mean(b)
};

inline TwoSampleTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = mean(a), mb = mean(b);
    double va = sample_variance(a) / static_cast<double>(a.size());
    double vb = sample_variance(b) / static_cast<double>(b.size());
    TwoSampleTest out;
    double denom = std::sqrt(va + vb);
    if (denom == 0.0) {
        out.t = ma > mb ? 1e300 : (ma < mb ? -1e300 : 0.0);
        out.df = static_cast<double>(a.size() + b.size() - 2);
        out.p_one_sided = ma > mb ? 0.0 : 1.0;
        return out;
    }
    out.t = (ma - mb) / denom;
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    out.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    out.p_one_sided = student_t_sf(out.t, out.df);
    return out;
}

}  // namespace frugal
