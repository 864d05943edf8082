#pragma once
// Controlled nonlocal continuity equation at particle scale: relaxed controls,
// joint characteristics flow, weak-form residuals, payoff, and trajectory
// growth diagnostics.

#include <functional>

#include "proxaim/transport.hpp"

namespace proxaim {

// Model data: drift f(t,x,m,u), running cost L(t,m,u), terminal cost G(m),
// together with the declared constants used by diagnostics and checks.
struct ControlModel {
    int dimension = 1;
    double horizon = 1.0;  // T
    std::vector<Vec> control_set;

    std::function<Vec(double, const Vec&, const ParticleMeasure&, const Vec&)> drift;
    std::function<double(double, const ParticleMeasure&, const Vec&)> running_cost;
    std::function<double(const ParticleMeasure&)> terminal_cost;

    double lip_f = 0.0;      // C_f: Lipschitz constant of f in (x, m)
    double lip_L = 0.0;      // C_L: Lipschitz constant of L in m
    double growth_c1 = 0.0;  // C_1 in |f| <= C_1 (1 + |x| + varsigma(m))
    std::function<double(double)> time_modulus_f = [](double) { return 0.0; };

    // lower bounds used by branch-and-bound pruning; -inf disables
    double running_cost_lower = -std::numeric_limits<double>::infinity();
    double terminal_cost_lower = -std::numeric_limits<double>::infinity();

    // declared trajectory growth bounds (flagged by growth_diagnostics)
    double bound_c1 = std::numeric_limits<double>::infinity();
    double bound_c2 = std::numeric_limits<double>::infinity();
    double bound_c3 = std::numeric_limits<double>::infinity();
    double bound_c4 = std::numeric_limits<double>::infinity();

    std::size_t n_controls() const { return control_set.size(); }
};

// Piecewise-constant-in-time probability mixtures over the finite control
// set: the Young-measure controls this toolkit searches over.
class RelaxedControl {
public:
    RelaxedControl() = default;
    RelaxedControl(std::vector<double> breakpoints, std::vector<std::vector<double>> mixtures,
                   const Tolerances& tol = default_tol())
        : breaks_(std::move(breakpoints)), mixtures_(std::move(mixtures)) {
        validate(tol);
    }

    static RelaxedControl constant(double s, double r, std::vector<double> mixture) {
        return RelaxedControl({s, r}, {std::move(mixture)});
    }

    static RelaxedControl pure(double s, double r, int u_index, std::size_t n_controls) {
        std::vector<double> mix(n_controls, 0.0);
        mix.at(u_index) = 1.0;
        return RelaxedControl({s, r}, {std::move(mix)});
    }

    // zero-length control at a single instant (identity for concatenation)
    static RelaxedControl empty(double at) { return RelaxedControl({at}, {}); }

    void validate(const Tolerances& tol = default_tol()) const {
        require(!breaks_.empty(), "control: no breakpoints");
        require(mixtures_.size() + 1 == breaks_.size(), "control: mixture count mismatch");
        for (std::size_t k = 0; k + 1 < breaks_.size(); ++k)
            require(breaks_[k] < breaks_[k + 1], "control: breakpoints must increase strictly");
        for (const auto& mix : mixtures_) {
            double s = 0.0;
            for (double w : mix) {
                require(w >= 0.0 && std::isfinite(w), "control: mixture weight invalid");
                s += w;
            }
            require(std::abs(s - 1.0) <= tol.weight_sum, "control: mixture must sum to 1");
        }
    }

    double start() const { return breaks_.front(); }
    double end() const { return breaks_.back(); }
    double duration() const { return end() - start(); }
    std::size_t intervals() const { return mixtures_.size(); }
    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<double>& mixture(std::size_t k) const { return mixtures_[k]; }

    const std::vector<double>& mixture_at(double t) const {
        require(!mixtures_.empty(), "control: zero-length control has no mixture");
        std::size_t lo = 0, hi = mixtures_.size();
        while (lo + 1 < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (t >= breaks_[mid]) lo = mid;
            else hi = mid;
        }
        return mixtures_[lo];
    }

    bool covers(double s, double r, double tol = 1e-12) const {
        return start() <= s + tol && end() >= r - tol;
    }

private:
    std::vector<double> breaks_;
    std::vector<std::vector<double>> mixtures_;
};

// xi1 followed by xi2 from time theta on.
inline RelaxedControl concat(const RelaxedControl& x1, double theta, const RelaxedControl& x2) {
    require(std::abs(x1.end() - theta) <= 1e-12, "concat: first control must end at theta");
    require(std::abs(x2.start() - theta) <= 1e-12, "concat: second control must start at theta");
    if (x2.intervals() == 0) return x1;
    if (x1.intervals() == 0) return x2;
    std::vector<double> breaks(x1.breakpoints());
    std::vector<std::vector<double>> mixes;
    for (std::size_t k = 0; k < x1.intervals(); ++k) mixes.push_back(x1.mixture(k));
    for (std::size_t k = 0; k < x2.intervals(); ++k) {
        breaks.push_back(x2.breakpoints()[k + 1]);
        mixes.push_back(x2.mixture(k));
    }
    return RelaxedControl(std::move(breaks), std::move(mixes));
}

// Time-indexed particle cloud plus the underlying characteristics flow.
// measures(k) is by construction the pushforward of the initial measure along
// the stored flow; weights never change.
struct MeasureTrajectory {
    std::vector<double> times;
    std::vector<std::vector<Vec>> flow;  // [time index][particle]
    std::vector<double> weights;

    std::size_t n_times() const { return times.size(); }
    std::size_t n_particles() const { return weights.size(); }
    ParticleMeasure measure_at(std::size_t k) const { return ParticleMeasure(flow[k], weights); }
    ParticleMeasure initial() const { return measure_at(0); }
    ParticleMeasure terminal() const { return measure_at(times.size() - 1); }
};

namespace detail {

inline std::vector<Vec> mixture_velocity(const ControlModel& model, double t,
                                         const std::vector<Vec>& positions,
                                         const std::vector<double>& weights,
                                         const std::vector<double>& mix) {
    const ParticleMeasure m(positions, weights);
    std::vector<Vec> v(positions.size(), Vec(model.dimension, 0.0));
    for (std::size_t k = 0; k < mix.size(); ++k) {
        if (mix[k] <= 0.0) continue;
        for (std::size_t i = 0; i < positions.size(); ++i)
            axpy(mix[k], model.drift(t, positions[i], m, model.control_set[k]), v[i]);
    }
    return v;
}

inline std::vector<Vec> shifted(const std::vector<Vec>& x, double h, const std::vector<Vec>& v) {
    std::vector<Vec> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) axpy(h, v[i], y[i]);
    return y;
}

}  // namespace detail

// Integrates the joint particle system dx/dt = int f(t,x,m_t,u) xi(du|t) with
// the classical 4th-order scheme on a fixed grid. The nonlocal coupling m_t is
// the simultaneously integrated cloud, and every control breakpoint lands on a
// grid node. Within one substep the mixture is frozen at the interval value,
// so the integrand stays smooth and the scheme keeps its order.
inline MeasureTrajectory solve_continuity(const ControlModel& model, double s, double r,
                                          const ParticleMeasure& mu, const RelaxedControl& xi,
                                          double step) {
    mu.validate();
    require(mu.dimension() == model.dimension, "solve_continuity: dimension mismatch");
    require(r >= s, "solve_continuity: r >= s required");
    require(step > 0.0, "solve_continuity: step must be positive");
    require(r == s || step <= r - s + 1e-15, "solve_continuity: step exceeds the horizon");
    require(xi.covers(s, r), "solve_continuity: control does not span [s, r]");
    for (std::size_t k = 0; k < xi.intervals(); ++k)
        require(xi.mixture(k).size() == model.n_controls(),
                "solve_continuity: mixture size does not match the control set");

    MeasureTrajectory traj;
    traj.weights = mu.weights();
    traj.times.push_back(s);
    traj.flow.push_back(mu.points());
    if (r == s) return traj;

    std::vector<Vec> x = mu.points();
    const auto& bp = xi.breakpoints();
    std::vector<double> nodes{s};
    for (double b : bp)
        if (b > s + 1e-12 && b < r - 1e-12) nodes.push_back(b);
    nodes.push_back(r);

    for (std::size_t seg = 0; seg + 1 < nodes.size(); ++seg) {
        const double a = nodes[seg], b = nodes[seg + 1];
        const int nsub = std::max(1, int(std::ceil((b - a) / step - 1e-12)));
        const double h = (b - a) / nsub;
        const auto& mix = xi.mixture_at((a + b) / 2.0);
        for (int q = 0; q < nsub; ++q) {
            const double t0 = a + q * h;
            const auto k1 = detail::mixture_velocity(model, t0, x, traj.weights, mix);
            const auto k2 = detail::mixture_velocity(model, t0 + h / 2,
                                                     detail::shifted(x, h / 2, k1), traj.weights, mix);
            const auto k3 = detail::mixture_velocity(model, t0 + h / 2,
                                                     detail::shifted(x, h / 2, k2), traj.weights, mix);
            const auto k4 = detail::mixture_velocity(model, t0 + h,
                                                     detail::shifted(x, h, k3), traj.weights, mix);
            for (std::size_t i = 0; i < x.size(); ++i)
                for (int c = 0; c < model.dimension; ++c)
                    x[i][c] += h / 6.0 *
                               (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
            const double t1 = (q + 1 == nsub) ? b : t0 + h;
            for (const Vec& p : x)
                require(all_finite(p), "solve_continuity: non-finite state at t=" +
                                            std::to_string(t1));
            traj.times.push_back(t1);
            traj.flow.push_back(x);
        }
    }
    return traj;
}

// Smooth test function with explicit time derivative and spatial gradient.
struct TestFunction {
    std::function<double(double, const Vec&)> value;
    std::function<double(double, const Vec&)> dt;
    std::function<Vec(double, const Vec&)> grad;
};

// Residual of the weak formulation against a (not necessarily compactly
// supported) test function:
//   [int phi dm_r - int phi dm_s] - int_s^r int int (dphi/dt + grad phi . f) xi dm dt.
// Zero for exact solutions up to O(step^2) trapezoid error.
inline double weak_form_residual(const ControlModel& model, const MeasureTrajectory& traj,
                                 const RelaxedControl& xi, const TestFunction& phi) {
    const auto eval_integrand = [&](double t, const std::vector<Vec>& pos,
                                    const std::vector<double>& mix) {
        const ParticleMeasure m(pos, traj.weights);
        double acc = 0.0;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            double gi = phi.dt(t, pos[i]);
            const Vec gr = phi.grad(t, pos[i]);
            for (std::size_t k = 0; k < mix.size(); ++k) {
                if (mix[k] <= 0.0) continue;
                gi += mix[k] * dot(gr, model.drift(t, pos[i], m, model.control_set[k]));
            }
            acc += traj.weights[i] * gi;
        }
        return acc;
    };

    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < traj.n_times(); ++k) {
        const double a = traj.times[k], b = traj.times[k + 1];
        const auto& mix = xi.mixture_at((a + b) / 2.0);
        integral += (b - a) / 2.0 *
                    (eval_integrand(a, traj.flow[k], mix) + eval_integrand(b, traj.flow[k + 1], mix));
    }

    double boundary = 0.0;
    for (std::size_t i = 0; i < traj.n_particles(); ++i)
        boundary += traj.weights[i] * (phi.value(traj.times.back(), traj.flow.back()[i]) -
                                       phi.value(traj.times.front(), traj.flow.front()[i]));
    return boundary - integral;
}

// Running cost along a stored trajectory, trapezoid in time with the interval
// mixture. Kept separate so that the payoff and the value search accumulate
// costs identically.
inline double accumulate_running_cost(const ControlModel& model, const MeasureTrajectory& traj,
                                      const RelaxedControl& xi) {
    auto cost_at = [&](double t, std::size_t k, const std::vector<double>& mix) {
        const ParticleMeasure m(traj.flow[k], traj.weights);
        double c = 0.0;
        for (std::size_t u = 0; u < mix.size(); ++u)
            if (mix[u] > 0.0) c += mix[u] * model.running_cost(t, m, model.control_set[u]);
        return c;
    };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < traj.n_times(); ++k) {
        const double a = traj.times[k], b = traj.times[k + 1];
        const auto& mix = xi.mixture_at((a + b) / 2.0);
        total += (b - a) / 2.0 * (cost_at(a, k, mix) + cost_at(b, k + 1, mix));
    }
    return total;
}

// J = int int L xi dm dt + G(m_T)
inline double payoff_J(const ControlModel& model, double s, const ParticleMeasure& mu,
                       const RelaxedControl& xi, double step) {
    require(xi.covers(s, model.horizon), "payoff: control must span [s, T]");
    const auto traj = solve_continuity(model, s, model.horizon, mu, xi, step);
    return accumulate_running_cost(model, traj, xi) + model.terminal_cost(traj.terminal());
}

// Smallest constants making the four trajectory growth inequalities hold,
// plus flags against the model's declared bounds.
struct GrowthReport {
    double c1 = 0.0;  // varsigma(m_t) <= c1 (1 + varsigma(mu))
    double c2 = 0.0;  // W2(m_t, mu)  <= c2 (1 + varsigma(mu)) |t-s|
    double c3 = 0.0;  // |X(y)|       <= c3 (1 + |y| + varsigma(mu))
    double c4 = 0.0;  // |X(y)-y|     <= c4 (1 + |y| + varsigma(mu)) |t-s|
    bool within_declared = true;
};

inline GrowthReport growth_diagnostics(const ControlModel& model, const MeasureTrajectory& traj) {
    GrowthReport rep;
    const ParticleMeasure mu = traj.initial();
    const double sig = second_moment_root(mu);
    const double s = traj.times.front();
    for (std::size_t k = 0; k < traj.n_times(); ++k) {
        const ParticleMeasure mt = traj.measure_at(k);
        rep.c1 = std::max(rep.c1, second_moment_root(mt) / (1.0 + sig));
        const double dt = traj.times[k] - s;
        if (dt > 1e-12)
            rep.c2 = std::max(rep.c2, wasserstein2_dist(mt, mu) / ((1.0 + sig) * dt));
        for (std::size_t i = 0; i < traj.n_particles(); ++i) {
            const double denom = 1.0 + norm(mu.point(i)) + sig;
            rep.c3 = std::max(rep.c3, norm(traj.flow[k][i]) / denom);
            if (dt > 1e-12)
                rep.c4 = std::max(rep.c4,
                                  std::sqrt(sqdist(traj.flow[k][i], mu.point(i))) / (denom * dt));
        }
    }
    rep.within_declared = rep.c1 <= model.bound_c1 && rep.c2 <= model.bound_c2 &&
                          rep.c3 <= model.bound_c3 && rep.c4 <= model.bound_c4;
    return rep;
}

// v^h(y) = (1/h) int_s^{s+h} int f(t, X^{s,t}(y), m_t, u) xi(du|t) dt on mu's
// support, trapezoid along the stored flow.
inline VelocityField averaged_velocity(const ControlModel& model, double s, double h,
                                       const ParticleMeasure& mu, const RelaxedControl& xi,
                                       double step) {
    require(h > 0.0, "averaged_velocity: h must be positive");
    const auto traj = solve_continuity(model, s, s + h, mu, xi, std::min(step, h));
    std::vector<Vec> acc(mu.size(), Vec(model.dimension, 0.0));
    auto add_sample = [&](std::size_t k, double w, const std::vector<double>& mix) {
        const double t = traj.times[k];
        const ParticleMeasure mt = traj.measure_at(k);
        for (std::size_t i = 0; i < mu.size(); ++i)
            for (std::size_t u = 0; u < mix.size(); ++u)
                if (mix[u] > 0.0)
                    axpy(w * mix[u], model.drift(t, traj.flow[k][i], mt, model.control_set[u]),
                         acc[i]);
    };
    for (std::size_t k = 0; k + 1 < traj.n_times(); ++k) {
        const double dt = traj.times[k + 1] - traj.times[k];
        const auto& mix = xi.mixture_at((traj.times[k] + traj.times[k + 1]) / 2.0);
        add_sample(k, dt / 2.0, mix);
        add_sample(k + 1, dt / 2.0, mix);
    }
    for (Vec& v : acc)
        for (double& c : v) c /= h;
    return VelocityField{std::move(acc)};
}

// Sampling-based certification of the declared model constants.
struct CertifyReport {
    double worst_growth_ratio = 0.0;
    double worst_lip_f_ratio = 0.0;
    double worst_lip_L_ratio = 0.0;
    bool ok = true;
};

inline CertifyReport certify_model(const ControlModel& model, std::mt19937_64& rng,
                                   int n_samples = 200, double slack = 0.05,
                                   double spread = 1.5, int max_support = 6) {
    CertifyReport rep;
    std::uniform_real_distribution<double> ut(0.0, model.horizon);
    std::uniform_int_distribution<int> un(1, max_support);
    std::uniform_int_distribution<std::size_t> uu(0, model.n_controls() - 1);
    std::normal_distribution<double> gx(0.0, spread);
    for (int it = 0; it < n_samples; ++it) {
        const double t = ut(rng);
        const auto m = random_measure(rng, model.dimension, un(rng), spread);
        const auto m2 = random_measure(rng, model.dimension, un(rng), spread);
        Vec x(model.dimension), x2(model.dimension);
        for (double& c : x) c = gx(rng);
        for (double& c : x2) c = gx(rng);
        const Vec& u = model.control_set[uu(rng)];

        const Vec fx = model.drift(t, x, m, u);
        rep.worst_growth_ratio =
            std::max(rep.worst_growth_ratio,
                     norm(fx) / (model.growth_c1 * (1.0 + norm(x) + second_moment_root(m))));

        const double df = norm(fx - model.drift(t, x2, m2, u));
        const double den_f = norm(x - x2) + wasserstein2_dist(m, m2);
        if (model.lip_f > 0.0 && den_f > 1e-9)
            rep.worst_lip_f_ratio = std::max(rep.worst_lip_f_ratio, df / (model.lip_f * den_f));

        const double dL = std::abs(model.running_cost(t, m, u) - model.running_cost(t, m2, u));
        const double den_L = wasserstein2_dist(m, m2);
        if (model.lip_L > 0.0 && den_L > 1e-9)
            rep.worst_lip_L_ratio = std::max(rep.worst_lip_L_ratio, dL / (model.lip_L * den_L));
    }
    rep.ok = rep.worst_growth_ratio <= 1.0 + 1e-9 && rep.worst_lip_f_ratio <= 1.0 + slack &&
             rep.worst_lip_L_ratio <= 1.0 + slack;
    return rep;
}

}  // namespace proxaim
