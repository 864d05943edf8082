#pragma once
// Built-in model library. Scenario files refer to these by id.

#include <map>

#include "proxaim/dynamics.hpp"

namespace proxaim {

inline double max_control_norm(const std::vector<Vec>& U) {
    double m = 0.0;
    for (const Vec& u : U) m = std::max(m, norm(u));
    return m;
}

inline std::vector<Vec> scalar_controls(std::initializer_list<double> us) {
    std::vector<Vec> out;
    for (double u : us) out.push_back({u});
    return out;
}

// f = 0, L = 0, G = 0
inline ControlModel make_zero_model(int d, std::vector<Vec> U) {
    ControlModel m;
    m.dimension = d;
    m.control_set = std::move(U);
    m.drift = [d](double, const Vec&, const ParticleMeasure&, const Vec&) {
        return Vec(d, 0.0);
    };
    m.running_cost = [](double, const ParticleMeasure&, const Vec&) { return 0.0; };
    m.terminal_cost = [](const ParticleMeasure&) { return 0.0; };
    m.growth_c1 = 1.0;
    m.running_cost_lower = 0.0;
    m.terminal_cost_lower = 0.0;
    m.bound_c1 = 1.0;
    m.bound_c2 = 1e-9;
    m.bound_c3 = 1.0;
    m.bound_c4 = 1e-9;
    return m;
}

// f = u, L = 0, G(m) = int |x|^2 dm. With U = {-1, 0, 1} and T - s = 1 this is
// the analytic benchmark used across the verification suites.
inline ControlModel make_translation_model(int d, std::vector<Vec> U) {
    ControlModel m;
    m.dimension = d;
    const double umax = max_control_norm(U);
    m.control_set = std::move(U);
    m.drift = [](double, const Vec&, const ParticleMeasure&, const Vec& u) { return u; };
    m.running_cost = [](double, const ParticleMeasure&, const Vec&) { return 0.0; };
    m.terminal_cost = [](const ParticleMeasure& mm) {
        const double s = second_moment_root(mm);
        return s * s;
    };
    m.growth_c1 = std::max(umax, 1e-12);
    m.lip_f = 0.0;
    m.lip_L = 0.0;
    m.running_cost_lower = 0.0;
    m.terminal_cost_lower = 0.0;
    m.bound_c1 = 1.0 + umax * m.horizon;
    m.bound_c2 = std::max(umax, 1e-12);
    m.bound_c3 = 1.0 + umax * m.horizon;
    m.bound_c4 = std::max(umax, 1e-12);
    return m;
}

// f = -rate * x (control ignored), L = 0, G = int |x|^2 dm
inline ControlModel make_contraction_model(int d, double rate, std::vector<Vec> U) {
    ControlModel m;
    m.dimension = d;
    m.control_set = std::move(U);
    m.drift = [rate](double, const Vec& x, const ParticleMeasure&, const Vec&) {
        Vec v = x;
        for (double& c : v) c *= -rate;
        return v;
    };
    m.running_cost = [](double, const ParticleMeasure&, const Vec&) { return 0.0; };
    m.terminal_cost = [](const ParticleMeasure& mm) {
        const double s = second_moment_root(mm);
        return s * s;
    };
    m.growth_c1 = rate;
    m.lip_f = rate;
    m.lip_L = 0.0;
    m.running_cost_lower = 0.0;
    m.terminal_cost_lower = 0.0;
    m.bound_c1 = 1.0;
    m.bound_c2 = rate;
    m.bound_c3 = 1.0;
    m.bound_c4 = rate;
    return m;
}

// Nonlocal model: f = u + attract * (mean(m) - x), L = |u|^2 + int |x|^2 dm,
// G = int |x|^2 dm. Exercises the measure coupling in both the drift and the
// running cost.
inline ControlModel make_mean_field_model(int d, double attract, std::vector<Vec> U,
                                          double lip_L_declared = 20.0) {
    ControlModel m;
    m.dimension = d;
    const double umax = max_control_norm(U);
    m.control_set = std::move(U);
    m.drift = [attract](double, const Vec& x, const ParticleMeasure& mm, const Vec& u) {
        const Vec mean = mean_point(mm);
        Vec v = u;
        for (int c = 0; c < int(v.size()); ++c) v[c] += attract * (mean[c] - x[c]);
        return v;
    };
    m.running_cost = [](double, const ParticleMeasure& mm, const Vec& u) {
        const double s = second_moment_root(mm);
        return sqnorm(u) + s * s;
    };
    m.terminal_cost = [](const ParticleMeasure& mm) {
        const double s = second_moment_root(mm);
        return s * s;
    };
    m.growth_c1 = umax + attract + 1e-12;
    m.lip_f = 2.0 * attract;
    m.lip_L = lip_L_declared;
    m.running_cost_lower = 0.0;
    m.terminal_cost_lower = 0.0;
    return m;
}

// Registry entry point used by scenario files.
inline ControlModel make_model(const std::string& id, int d, std::vector<Vec> U,
                               const std::map<std::string, double>& params = {}) {
    auto get = [&](const std::string& key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    for (const auto& [key, _] : params)
        require(key == "rate" || key == "attract" || key == "lip_L",
                "model: unknown parameter '" + key + "'");
    if (id == "zero") return make_zero_model(d, std::move(U));
    if (id == "translation") return make_translation_model(d, std::move(U));
    if (id == "contraction") return make_contraction_model(d, get("rate", 1.0), std::move(U));
    if (id == "mean_field")
        return make_mean_field_model(d, get("attract", 0.5), std::move(U), get("lip_L", 20.0));
    throw error("model: unknown id '" + id + "'");
}

}  // namespace proxaim
