#pragma once
// Small shared pieces: vector helpers, tolerances, error type.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxaim {

// Points live in R^d, covectors in the dual; both are plain coordinate vectors.
using Vec = std::vector<double>;

class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Central tolerance record. Marginal/metric defaults follow the file-format and
// metric-comparison contracts; weight_sum guards probability normalization.
struct Tolerances {
    double weight_sum = 1e-12;
    double marginal = 1e-10;
    double metric = 1e-9;
    double exact = 1e-12;
};

inline const Tolerances& default_tol() {
    static const Tolerances t{};
    return t;
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sqnorm(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(sqnorm(a)); }

inline double sqdist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline Vec operator+(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Vec operator-(Vec a, const Vec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Vec operator*(double c, Vec a) {
    for (double& x : a) x *= c;
    return a;
}

inline void axpy(double c, const Vec& x, Vec& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline bool all_finite(const Vec& a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw error(msg);
}

}  // namespace proxaim
