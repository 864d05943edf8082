#pragma once
// Shared fixtures for the unit and acceptance suites: polynomial test
// functions and the analytic benchmark oracle.

#include <vector>

#include "proxaim/dynamics.hpp"
#include "proxaim/models.hpp"

namespace helpers {

using namespace proxaim;

// Polynomial test functions of degree <= 2 in x (d = 1), with explicit time
// derivatives and gradients.
inline std::vector<TestFunction> poly_test_functions_1d() {
    std::vector<TestFunction> out;
    out.push_back({[](double, const Vec&) { return 1.0; },
                   [](double, const Vec&) { return 0.0; },
                   [](double, const Vec&) { return Vec{0.0}; }});
    out.push_back({[](double, const Vec& x) { return x[0]; },
                   [](double, const Vec&) { return 0.0; },
                   [](double, const Vec&) { return Vec{1.0}; }});
    out.push_back({[](double, const Vec& x) { return x[0] * x[0]; },
                   [](double, const Vec&) { return 0.0; },
                   [](double, const Vec& x) { return Vec{2.0 * x[0]}; }});
    out.push_back({[](double t, const Vec& x) { return t * x[0]; },
                   [](double, const Vec& x) { return x[0]; },
                   [](double t, const Vec&) { return Vec{t}; }});
    out.push_back({[](double t, const Vec& x) { return t * t + x[0] - 0.5 * x[0] * x[0]; },
                   [](double t, const Vec&) { return 2.0 * t; },
                   [](double, const Vec& x) { return Vec{1.0 - x[0]}; }});
    return out;
}

// The model library the dynamics criteria sweep over (d = 1).
inline std::vector<ControlModel> model_library_1d() {
    std::vector<ControlModel> out;
    out.push_back(make_zero_model(1, scalar_controls({0.0})));
    out.push_back(make_translation_model(1, scalar_controls({-1.0, 0.0, 1.0})));
    out.push_back(make_contraction_model(1, 1.0, scalar_controls({0.0})));
    out.push_back(make_mean_field_model(1, 0.5, scalar_controls({-1.0, 1.0})));
    return out;
}

// Independent oracle for the benchmark (f = u, L = 0, G = second moment,
// |u| <= 1): the mixture-mean velocity field is a common drift, so the value
// is the best common displacement of size at most T - s,
//   Val(s, mu) = min_{|C| <= T-s} int |x + C|^2 mu(dx).
// On Diracs this reduces to max(|y| - (T-s), 0)^2.
inline double benchmark_value_oracle(double s, double T, const ParticleMeasure& mu) {
    const double budget = T - s;
    double mean = 0.0, second = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        mean += mu.weight(i) * mu.point(i)[0];
        second += mu.weight(i) * mu.point(i)[0] * mu.point(i)[0];
    }
    const double C = std::clamp(-mean, -budget, budget);
    return second + 2.0 * C * mean + C * C;
}

}  // namespace helpers
