#pragma once
// Discrete probability measures with finite second moment and the associated
// field/cotangent types.

#include <algorithm>
#include <map>
#include <random>

#include "proxaim/core.hpp"

namespace proxaim {

// A weighted finite support: points x_i in R^d with nonnegative weights
// summing to one.
class ParticleMeasure {
public:
    ParticleMeasure() = default;
    ParticleMeasure(std::vector<Vec> points, std::vector<double> weights,
                    const Tolerances& tol = default_tol())
        : points_(std::move(points)), weights_(std::move(weights)) {
        validate(tol);
    }

    static ParticleMeasure dirac(Vec x) { return ParticleMeasure({std::move(x)}, {1.0}); }

    static ParticleMeasure uniform(std::vector<Vec> points) {
        const std::size_t n = points.size();
        require(n >= 1, "measure: empty support");
        return ParticleMeasure(std::move(points), std::vector<double>(n, 1.0 / double(n)));
    }

    std::size_t size() const { return points_.size(); }
    int dimension() const { return points_.empty() ? 0 : int(points_[0].size()); }
    const Vec& point(std::size_t i) const { return points_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<Vec>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }

    void validate(const Tolerances& tol = default_tol()) const {
        require(!points_.empty(), "measure: N >= 1 required");
        require(points_.size() == weights_.size(), "measure: points/weights size mismatch");
        const std::size_t d = points_[0].size();
        double sum = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            require(points_[i].size() == d, "measure: inconsistent dimension");
            require(all_finite(points_[i]), "measure: non-finite coordinate");
            require(std::isfinite(weights_[i]) && weights_[i] >= 0.0,
                    "measure: weight must be finite and nonnegative");
            sum += weights_[i];
        }
        require(std::abs(sum - 1.0) <= tol.weight_sum, "measure: weights must sum to 1");
    }

    // Merge exactly coincident support points, summing weights. Opt-in; keeps
    // every integral of a continuous function unchanged.
    ParticleMeasure merged() const {
        std::map<Vec, double> acc;
        for (std::size_t i = 0; i < size(); ++i) acc[points_[i]] += weights_[i];
        std::vector<Vec> pts;
        std::vector<double> w;
        pts.reserve(acc.size());
        for (auto& [p, m] : acc) {
            pts.push_back(p);
            w.push_back(m);
        }
        return ParticleMeasure(std::move(pts), std::move(w));
    }

    bool same_support_as(const ParticleMeasure& other, double tol = 1e-12) const {
        if (size() != other.size()) return false;
        for (std::size_t i = 0; i < size(); ++i) {
            if (std::abs(weights_[i] - other.weights_[i]) > tol) return false;
            if (sqdist(points_[i], other.points_[i]) > tol * tol) return false;
        }
        return true;
    }

private:
    std::vector<Vec> points_;
    std::vector<double> weights_;
};

// varsigma(m) = (int |x|^2 dm)^{1/2}
inline double second_moment_root(const ParticleMeasure& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) s += mu.weight(i) * sqnorm(mu.point(i));
    return std::sqrt(s);
}

inline Vec mean_point(const ParticleMeasure& mu) {
    Vec m(mu.dimension(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) axpy(mu.weight(i), mu.point(i), m);
    return m;
}

// Image measure: support replaced by the given images, weights kept.
inline ParticleMeasure pushforward(const ParticleMeasure& mu, std::vector<Vec> images,
                                   bool merge = false) {
    require(images.size() == mu.size(), "pushforward: image count must match support size");
    ParticleMeasure out(std::move(images), mu.weights());
    return merge ? out.merged() : out;
}

template <typename Map>
ParticleMeasure pushforward_map(const ParticleMeasure& mu, Map&& f, bool merge = false) {
    std::vector<Vec> images;
    images.reserve(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) images.push_back(f(mu.point(i)));
    return pushforward(mu, std::move(images), merge);
}

// One covector per support point of an associated measure.
struct CovectorField {
    std::vector<Vec> values;

    void validate_for(const ParticleMeasure& mu) const {
        require(values.size() == mu.size(), "covector field: size mismatch with measure");
        for (const Vec& v : values) require(all_finite(v), "covector field: non-finite entry");
    }
};

struct VelocityField {
    std::vector<Vec> values;

    void validate_for(const ParticleMeasure& mu) const {
        require(values.size() == mu.size(), "velocity field: size mismatch with measure");
        for (const Vec& v : values) require(all_finite(v), "velocity field: non-finite entry");
    }
};

// <p, v>_mu = int p(x) v(x) mu(dx)
inline double pairing(const CovectorField& p, const VelocityField& v, const ParticleMeasure& mu) {
    require(p.values.size() == mu.size() && v.values.size() == mu.size(),
            "pairing: field size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) s += mu.weight(i) * dot(p.values[i], v.values[i]);
    return s;
}

inline double l2_norm(const std::vector<Vec>& values, const ParticleMeasure& mu) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) s += mu.weight(i) * sqnorm(values[i]);
    return std::sqrt(s);
}

// A distribution over the cotangent bundle: atoms (x, q, mass).
struct CotangentAtom {
    Vec x;
    Vec q;
    double mass;
};

class CotangentSample {
public:
    CotangentSample() = default;
    explicit CotangentSample(std::vector<CotangentAtom> atoms,
                             const Tolerances& tol = default_tol())
        : atoms_(std::move(atoms)) {
        validate(tol);
    }

    const std::vector<CotangentAtom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }

    void validate(const Tolerances& tol = default_tol()) const {
        require(!atoms_.empty(), "cotangent sample: empty");
        double sum = 0.0;
        for (const auto& a : atoms_) {
            require(all_finite(a.x) && all_finite(a.q), "cotangent sample: non-finite atom");
            require(a.mass >= 0.0, "cotangent sample: negative mass");
            sum += a.mass;
        }
        require(std::abs(sum - 1.0) <= tol.weight_sum, "cotangent sample: masses must sum to 1");
    }

    // p^1-projection as a particle measure (atoms kept in order, zero-mass
    // atoms dropped to satisfy measure invariants only if all-positive fails).
    ParticleMeasure base_measure() const {
        std::vector<Vec> pts;
        std::vector<double> w;
        for (const auto& a : atoms_) {
            pts.push_back(a.x);
            w.push_back(a.mass);
        }
        return ParticleMeasure(std::move(pts), std::move(w));
    }

    CotangentSample negated() const {
        std::vector<CotangentAtom> flipped = atoms_;
        for (auto& a : flipped)
            for (double& c : a.q) c = -c;
        return CotangentSample(std::move(flipped));
    }

private:
    std::vector<CotangentAtom> atoms_;
};

// Barycenter b[gamma](x) = int q gamma(dq|x): mass-weighted mean of the q's
// attached to each distinct support point.
struct BarycenterResult {
    ParticleMeasure base;    // distinct support points with aggregated masses
    CovectorField field;     // one covector per base point
};

inline BarycenterResult barycenter(const CotangentSample& gamma) {
    std::map<Vec, std::pair<Vec, double>> acc;  // x -> (sum mass*q, sum mass)
    for (const auto& a : gamma.atoms()) {
        auto it = acc.find(a.x);
        if (it == acc.end()) {
            Vec mq = a.q;
            for (double& c : mq) c *= a.mass;
            acc.emplace(a.x, std::make_pair(std::move(mq), a.mass));
        } else {
            axpy(a.mass, a.q, it->second.first);
            it->second.second += a.mass;
        }
    }
    BarycenterResult out;
    std::vector<Vec> pts;
    std::vector<double> w;
    for (auto& [x, mq] : acc) {
        pts.push_back(x);
        w.push_back(mq.second);
        Vec q = mq.first;
        if (mq.second > 0.0)
            for (double& c : q) c /= mq.second;
        out.field.values.push_back(std::move(q));
    }
    out.base = ParticleMeasure(std::move(pts), std::move(w));
    return out;
}

inline ParticleMeasure random_measure(std::mt19937_64& rng, int d, int n, double spread = 2.0,
                                      bool equal_weights = true) {
    std::normal_distribution<double> g(0.0, spread);
    std::vector<Vec> pts(n, Vec(d));
    for (auto& p : pts)
        for (double& c : p) c = g(rng);
    if (equal_weights) return ParticleMeasure::uniform(std::move(pts));
    std::uniform_real_distribution<double> u(0.1, 1.0);
    std::vector<double> w(n);
    double s = 0.0;
    for (double& x : w) {
        x = u(rng);
        s += x;
    }
    double acc = 0.0;
    for (int i = 0; i < n - 1; ++i) {
        w[i] /= s;
        acc += w[i];
    }
    w[n - 1] = 1.0 - acc;
    return ParticleMeasure(std::move(pts), std::move(w));
}

}  // namespace proxaim
