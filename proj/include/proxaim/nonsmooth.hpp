#pragma once
// Moreau-Yosida inf/sup envelopes over a finite value dictionary, proximal
// pair extraction, and numerical checkers for the sub/superdifferential
// inequalities and envelope bounds.

#include <functional>
#include <optional>

#include "proxaim/transport.hpp"

namespace proxaim {

using ValueFn = std::function<double(double, const ParticleMeasure&)>;

// Least concave nondecreasing majorant of empirical increments, evaluated by
// linear interpolation and constant beyond the last knot.
class Modulus {
public:
    Modulus() : knots_{{0.0, 0.0}} {}

    static Modulus from_increments(std::vector<std::pair<double, double>> pts) {
        std::vector<std::pair<double, double>> raw{{0.0, 0.0}};
        for (auto& p : pts)
            if (p.first > 0.0 && p.second > 0.0) raw.push_back(p);
        std::sort(raw.begin(), raw.end());
        std::vector<std::pair<double, double>> data;  // max y per distinct x
        for (const auto& p : raw) {
            if (!data.empty() && data.back().first == p.first) data.back().second = p.second;
            else data.push_back(p);
        }

        // upper concave hull, left to right: slopes must not increase
        std::vector<std::pair<double, double>> hull;
        for (const auto& p : data) {
            while (hull.size() >= 2) {
                const auto& a = hull[hull.size() - 2];
                const auto& b = hull.back();
                const double lhs = (b.second - a.second) * (p.first - b.first);
                const double rhs = (p.second - b.second) * (b.first - a.first);
                if (lhs <= rhs) hull.pop_back();  // b lies under the a->p chord
                else break;
            }
            hull.push_back(p);
        }
        // enforce monotonicity: truncate after the apex, constant from there
        std::size_t apex = 0;
        for (std::size_t i = 1; i < hull.size(); ++i)
            if (hull[i].second >= hull[apex].second) apex = i;
        hull.resize(apex + 1);

        Modulus m;
        m.knots_ = std::move(hull);
        if (m.knots_.empty() || m.knots_.front().first != 0.0)
            m.knots_.insert(m.knots_.begin(), {0.0, 0.0});
        return m;
    }

    double operator()(double r) const {
        if (r <= 0.0) return 0.0;
        if (r >= knots_.back().first) return knots_.back().second;
        std::size_t lo = 0, hi = knots_.size() - 1;
        while (lo + 1 < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (knots_[mid].first <= r) lo = mid;
            else hi = mid;
        }
        const auto& a = knots_[lo];
        const auto& b = knots_[lo + 1];
        const double w = (r - a.first) / (b.first - a.first);
        return a.second + w * (b.second - a.second);
    }

    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

private:
    std::vector<std::pair<double, double>> knots_;
};

struct DictEntry {
    double t;
    ParticleMeasure nu;
    double value;
};

// Finite sampled stand-in for a uniformly continuous function on
// [0,T] x (measure set). Immutable once built; envelope queries are pure.
class ValueDictionary {
public:
    explicit ValueDictionary(std::vector<DictEntry> entries,
                             std::optional<double> c0_override = std::nullopt)
        : entries_(std::move(entries)) {
        require(!entries_.empty(), "dictionary: empty");
        double c0 = 0.0;
        for (const auto& e : entries_) {
            e.nu.validate();
            require(std::isfinite(e.value), "dictionary: non-finite value");
            c0 = std::max(c0, std::abs(e.value));
        }
        if (c0_override) {
            require(*c0_override >= c0, "dictionary: c0 override below max |value|");
            c0 = *c0_override;
        }
        c0_ = c0;

        std::vector<std::pair<double, double>> incr;
        incr.reserve(entries_.size() * (entries_.size() - 1) / 2);
        self_anchor_kappa_ = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < entries_.size(); ++i)
            for (std::size_t j = i + 1; j < entries_.size(); ++j) {
                const double dt = entries_[i].t - entries_[j].t;
                const double dw = wasserstein2_dist(entries_[i].nu, entries_[j].nu);
                const double dist = std::sqrt(dt * dt + dw * dw);
                const double dv = std::abs(entries_[i].value - entries_[j].value);
                if (dist <= 1e-12)
                    require(dv <= 1e-9, "dictionary: conflicting values at one point");
                incr.push_back({dist, dv});
                if (dv > 1e-15)
                    self_anchor_kappa_ =
                        std::min(self_anchor_kappa_, dist / std::sqrt(2.0 * dv));
            }
        omega_ = Modulus::from_increments(std::move(incr));
    }

    std::size_t size() const { return entries_.size(); }
    const DictEntry& entry(std::size_t i) const { return entries_[i]; }
    const std::vector<DictEntry>& entries() const { return entries_; }
    double c0() const { return c0_; }
    double omega(double r) const { return omega_(r); }
    const Modulus& modulus() const { return omega_; }

    // Largest kappa below which every query at a dictionary entry anchors to
    // itself (no other entry's value drop beats the quadratic penalty).
    double self_anchor_kappa() const { return self_anchor_kappa_; }

    double rho1(double kappa) const {
        const double reach = kappa * std::sqrt(2.0 * c0_);
        return std::min(kappa * std::sqrt(2.0) * std::sqrt(omega_(reach)), reach);
    }

    double rho3(double kappa) const {
        const double rp = std::sqrt(2.0) * std::sqrt(omega_(2.0 * kappa * std::sqrt(c0_)));
        return omega_(kappa * rp) + 0.5 * rp * rp;
    }

    std::optional<std::size_t> find_entry(double t, const ParticleMeasure& mu,
                                          double tol = 1e-9) const {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (std::abs(entries_[i].t - t) > tol) continue;
            if (entries_[i].nu.same_support_as(mu, tol)) return i;
            // fall back to a canonical comparison for reordered supports
            if (entries_[i].nu.merged().same_support_as(mu.merged(), tol)) return i;
        }
        return std::nullopt;
    }

    // Exact lookup evaluator; throws on points outside the dictionary.
    ValueFn value_fn() const {
        return [this](double t, const ParticleMeasure& mu) {
            const auto idx = find_entry(t, mu);
            require(idx.has_value(), "dictionary: value queried outside the dictionary");
            return entries_[*idx].value;
        };
    }

    ValueDictionary with_bumped_entry(std::size_t index, double bump) const {
        std::vector<DictEntry> es = entries_;
        es.at(index).value += bump;
        return ValueDictionary(std::move(es));
    }

private:
    std::vector<DictEntry> entries_;
    double c0_ = 0.0;
    double self_anchor_kappa_ = 0.0;
    Modulus omega_;
};

struct MYDiagnostics {
    double rho1 = 0.0;
    double rho3 = 0.0;
    double anchor_distance = 0.0;
    // residual of the pseudo-minimizer inequality at the query (NaN when the
    // query is not a dictionary entry) and the gap to the runner-up candidate
    double ekeland_primary = std::numeric_limits<double>::quiet_NaN();
    double ekeland_gap = 0.0;
};

struct MoreauYosidaResult {
    double value = 0.0;
    int anchor_index = -1;
    double anchor_t = 0.0;
    ParticleMeasure anchor_nu;
    TransportPlan plan;  // query measure -> anchor measure
    MYDiagnostics diag;
};

namespace detail {

inline MoreauYosidaResult my_envelope(const ValueDictionary& dict, double s,
                                      const ParticleMeasure& mu, double kappa, bool inf_side) {
    require(kappa > 0.0, "moreau_yosida: kappa must be positive");
    mu.validate();
    const double inv = 1.0 / (2.0 * kappa * kappa);

    int best = -1;
    double best_obj = 0.0, best_w2 = 0.0;
    double second_obj = inf_side ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
    std::optional<W2Result> best_plan;
    for (std::size_t i = 0; i < dict.size(); ++i) {
        const auto& e = dict.entry(i);
        auto w2 = wasserstein2(mu, e.nu);
        const double pen = inv * ((e.t - s) * (e.t - s) + w2.dist * w2.dist);
        const double obj = inf_side ? e.value + pen : e.value - pen;
        if (best < 0 || (inf_side ? obj < best_obj : obj > best_obj)) {
            if (best >= 0) second_obj = best_obj;
            best = int(i);
            best_obj = obj;
            best_w2 = w2.dist;
            best_plan = std::move(w2);
        } else {
            second_obj = inf_side ? std::min(second_obj, obj) : std::max(second_obj, obj);
        }
    }

    const auto& anchor = dict.entry(best);
    MoreauYosidaResult out;
    out.value = best_obj;
    out.anchor_index = best;
    out.anchor_t = anchor.t;
    out.anchor_nu = anchor.nu;
    out.plan = best_plan->plan;
    out.diag.rho1 = dict.rho1(kappa);
    out.diag.rho3 = dict.rho3(kappa);
    out.diag.anchor_distance =
        std::sqrt((anchor.t - s) * (anchor.t - s) + best_w2 * best_w2);
    if (dict.size() > 1)
        out.diag.ekeland_gap = inf_side ? second_obj - best_obj : best_obj - second_obj;
    if (const auto self = dict.find_entry(s, mu))
        out.diag.ekeland_primary =
            inf_side ? dict.entry(*self).value - best_obj : best_obj - dict.entry(*self).value;
    return out;
}

}  // namespace detail

// phi_kappa(s, mu) = min over entries of value + (1/2k^2)(|t-s|^2 + W2^2).
// Exact minimization, ties to the lowest entry index.
inline MoreauYosidaResult moreau_yosida_inf(const ValueDictionary& dict, double s,
                                            const ParticleMeasure& mu, double kappa) {
    return detail::my_envelope(dict, s, mu, kappa, true);
}

// psi^kappa(s, mu) = max over entries of value - penalty (sup-convolution).
inline MoreauYosidaResult moreau_yosida_sup(const ValueDictionary& dict, double s,
                                            const ParticleMeasure& mu, double kappa) {
    return detail::my_envelope(dict, s, mu, kappa, false);
}

enum class PairSign { sub, super };

// The (a, gamma) data extracted from a Moreau-Yosida anchor: gamma lives on
// the anchor support, with covectors kappa^{-2}(query point - anchor point)
// for subgradients and the opposite sign for supergradients.
struct ProximalPair {
    double a = 0.0;
    CotangentSample gamma;
    double kappa = 1.0;
    double epsilon = 0.0;
    double anchor_t = 0.0;
    ParticleMeasure anchor_nu;
    TransportPlan plan;  // query -> anchor
    PairSign sign = PairSign::sub;
    double query_t = 0.0;
    ParticleMeasure query_mu;
    bool gate_ok = false;

    // The same covectors re-based on the query support via disintegration
    // over the plan's first marginal; this is the field the Hamiltonian and
    // the aiming rule consume.
    CovectorField field_on_query() const {
        std::vector<Vec> vals(query_mu.size(), Vec(query_mu.dimension(), 0.0));
        const double invk2 = 1.0 / (kappa * kappa);
        for (const auto& e : plan.entries) {
            const double w = query_mu.weight(e.i);
            if (w <= 0.0 || e.mass <= 0.0) continue;
            Vec d = query_mu.point(e.i) - anchor_nu.point(e.j);
            const double c = (sign == PairSign::sub ? invk2 : -invk2) * e.mass / w;
            axpy(c, d, vals[e.i]);
        }
        return CovectorField{std::move(vals)};
    }

    CovectorField field_on_anchor() const { return barycenter(gamma).field; }
};

inline ProximalPair proximal_pair_from_anchor(
    double s, const ParticleMeasure& mu, double anchor_t, const ParticleMeasure& anchor_nu,
    const TransportPlan& plan, double kappa, double eps, PairSign sign,
    double rho1 = std::numeric_limits<double>::infinity(),
    double horizon = std::numeric_limits<double>::infinity()) {
    require(plan.source.same_support_as(mu), "proximal pair: plan source must be the query");
    require(plan.target.same_support_as(anchor_nu), "proximal pair: plan target must be anchor");
    const double invk2 = 1.0 / (kappa * kappa);

    std::vector<CotangentAtom> atoms;
    for (const auto& e : plan.entries) {
        if (e.mass <= 0.0) continue;
        Vec q = mu.point(e.i) - anchor_nu.point(e.j);
        for (double& c : q) c *= (sign == PairSign::sub ? invk2 : -invk2);
        atoms.push_back({anchor_nu.point(e.j), std::move(q), e.mass});
    }

    ProximalPair pair;
    pair.a = (sign == PairSign::sub ? invk2 : -invk2) * (s - anchor_t);
    pair.gamma = CotangentSample(std::move(atoms));
    pair.kappa = kappa;
    pair.epsilon = eps;
    pair.anchor_t = anchor_t;
    pair.anchor_nu = anchor_nu;
    pair.plan = plan;
    pair.sign = sign;
    pair.query_t = s;
    pair.query_mu = mu;
    pair.gate_ok = rho1 < std::min({1.0, s, horizon - s});
    return pair;
}

inline ProximalPair make_proximal_pair(const ValueDictionary& dict,
                                       const MoreauYosidaResult& my, double s,
                                       const ParticleMeasure& mu, double kappa, double eps,
                                       PairSign sign, double horizon) {
    return proximal_pair_from_anchor(s, mu, my.anchor_t, my.anchor_nu, my.plan, kappa, eps, sign,
                                     dict.rho1(kappa), horizon);
}

// A probe for the proximal inequality: (t, nu) together with a coupling of
// gamma's atoms and nu's atoms.
struct ProxProbe {
    double t;
    ParticleMeasure nu;
    std::vector<ThreePlanEntry> beta;  // (gamma atom, nu atom, unused=0, mass) -> use i,j
};

inline ProxProbe diagonal_probe(const ProximalPair& pair) {
    ProxProbe p;
    p.t = pair.anchor_t;
    p.nu = pair.anchor_nu;
    int g = 0;
    for (const auto& e : pair.plan.entries) {
        if (e.mass <= 0.0) continue;
        p.beta.push_back({g, e.j, 0, e.mass});
        ++g;
    }
    return p;
}

inline ProxProbe product_probe(const CotangentSample& gamma, double t,
                               const ParticleMeasure& nu) {
    ProxProbe p{t, nu, {}};
    for (int g = 0; g < int(gamma.size()); ++g)
        for (int k = 0; k < int(nu.size()); ++k) {
            const double m = gamma.atoms()[g].mass * nu.weight(k);
            if (m > 0.0) p.beta.push_back({g, k, 0, m});
        }
    return p;
}

// Random feasible coupling via a shuffled greedy fill; marginals are exact.
inline ProxProbe random_probe(const CotangentSample& gamma, double t, const ParticleMeasure& nu,
                              std::mt19937_64& rng) {
    std::vector<int> gs(gamma.size()), ks(nu.size());
    std::iota(gs.begin(), gs.end(), 0);
    std::iota(ks.begin(), ks.end(), 0);
    std::shuffle(gs.begin(), gs.end(), rng);
    std::shuffle(ks.begin(), ks.end(), rng);
    std::vector<double> rem_g(gamma.size()), rem_k(nu.size());
    for (std::size_t g = 0; g < gamma.size(); ++g) rem_g[g] = gamma.atoms()[g].mass;
    for (std::size_t k = 0; k < nu.size(); ++k) rem_k[k] = nu.weight(k);
    ProxProbe p{t, nu, {}};
    std::size_t a = 0, b = 0;
    while (a < gs.size() && b < ks.size()) {
        const int g = gs[a], k = ks[b];
        const double m = std::min(rem_g[g], rem_k[k]);
        if (m > 0.0) p.beta.push_back({g, k, 0, m});
        rem_g[g] -= m;
        rem_k[k] -= m;
        if (rem_g[g] <= 1e-15) ++a;
        if (rem_k[k] <= 1e-15) ++b;
        if (m <= 0.0 && rem_g[g] > 1e-15 && rem_k[k] > 1e-15) break;  // cannot progress
    }
    return p;
}

struct ProbeResult {
    int probe_id;
    double margin;
    bool valid;
    std::string note;
};

struct CheckReport {
    double worst_margin = std::numeric_limits<double>::infinity();
    std::vector<ProbeResult> probes;
    double sigma_used = 0.0;
    int n_valid = 0;
};

namespace detail {

struct ProbeTerms {
    double dv, lin, pairterm, penalty, epsdist;
    bool valid;
    std::string note;
};

inline ProbeTerms probe_terms(const ValueFn& phi, double s, const ParticleMeasure& mu,
                              const ProximalPair& pair, const ProxProbe& probe,
                              bool need_epsdist) {
    ProbeTerms t{};
    t.valid = true;
    const auto& atoms = pair.gamma.atoms();
    std::vector<double> mg(atoms.size(), 0.0), mk(probe.nu.size(), 0.0);
    t.pairterm = 0.0;
    t.penalty = 0.0;
    for (const auto& e : probe.beta) {
        if (e.i < 0 || e.i >= int(atoms.size()) || e.j < 0 || e.j >= int(probe.nu.size()) ||
            e.mass < 0.0) {
            t.valid = false;
            t.note = "coupling index/mass out of range";
            return t;
        }
        mg[e.i] += e.mass;
        mk[e.j] += e.mass;
        const Vec d = probe.nu.point(e.j) - atoms[e.i].x;
        t.pairterm += e.mass * dot(atoms[e.i].q, d);
        t.penalty += e.mass * sqnorm(d);
    }
    for (std::size_t g = 0; g < atoms.size(); ++g)
        if (std::abs(mg[g] - atoms[g].mass) > 1e-9) {
            t.valid = false;
            t.note = "gamma marginal violated";
            return t;
        }
    for (std::size_t k = 0; k < probe.nu.size(); ++k)
        if (std::abs(mk[k] - probe.nu.weight(k)) > 1e-9) {
            t.valid = false;
            t.note = "probe measure marginal violated";
            return t;
        }
    t.dv = phi(probe.t, probe.nu) - phi(s, mu);
    t.lin = pair.a * (probe.t - s);
    const double dt2 = (probe.t - s) * (probe.t - s);
    t.penalty += dt2;
    t.epsdist = 0.0;
    if (need_epsdist) {
        const double w = wasserstein2_dist(probe.nu, mu);
        t.epsdist = std::sqrt(dt2 + w * w);
    }
    return t;
}

}  // namespace detail

// Worst margin of the proximal inequality over the probes. sigma defaults to
// the quadratic-expansion constant 1/(2 kappa^2) attached to the pair.
inline CheckReport check_prox_subgradient(const ValueFn& phi, double s, const ParticleMeasure& mu,
                                          const ProximalPair& pair,
                                          const std::vector<ProxProbe>& probes,
                                          std::optional<double> sigma = std::nullopt) {
    CheckReport rep;
    rep.sigma_used = sigma.value_or(1.0 / (2.0 * pair.kappa * pair.kappa));
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const auto t = detail::probe_terms(phi, s, mu, pair, probes[p], pair.epsilon > 0.0);
        if (!t.valid) {
            rep.probes.push_back({int(p), 0.0, false, t.note});
            continue;
        }
        const double rhs_wo_relax = t.lin + t.pairterm;
        const double relax = rep.sigma_used * t.penalty + pair.epsilon * t.epsdist;
        const double margin = (pair.sign == PairSign::sub) ? t.dv - rhs_wo_relax + relax
                                                           : rhs_wo_relax + relax - t.dv;
        rep.probes.push_back({int(p), margin, true, ""});
        rep.worst_margin = std::min(rep.worst_margin, margin);
        ++rep.n_valid;
    }
    return rep;
}

// Smallest sigma >= 0 making every probe margin nonnegative; +inf when no
// finite sigma works.
inline double fit_sigma(const ValueFn& phi, double s, const ParticleMeasure& mu,
                        const ProximalPair& pair, const std::vector<ProxProbe>& probes) {
    double sigma = 0.0;
    for (const auto& probe : probes) {
        const auto t = detail::probe_terms(phi, s, mu, pair, probe, pair.epsilon > 0.0);
        if (!t.valid) continue;
        const double base = (pair.sign == PairSign::sub)
                                ? t.dv - t.lin - t.pairterm + pair.epsilon * t.epsdist
                                : t.lin + t.pairterm - t.dv + pair.epsilon * t.epsdist;
        if (base >= 0.0) continue;
        if (t.penalty <= 1e-15) return std::numeric_limits<double>::infinity();
        sigma = std::max(sigma, -base / t.penalty);
    }
    return sigma;
}

struct Direction {
    double theta;
    VelocityField v;
};

// Finite-h refutation check of the directional inequality. A finite sample
// of h can only refute membership, never prove it.
inline CheckReport check_directional_subgradient(const ValueFn& phi, double s,
                                                 const ParticleMeasure& mu, double a,
                                                 const CovectorField& p, double eps,
                                                 const std::vector<Direction>& dirs,
                                                 std::vector<double> h_seq = {1e-1, 1e-2, 1e-3,
                                                                              1e-4},
                                                 bool super = false) {
    p.validate_for(mu);
    CheckReport rep;
    const double phi0 = phi(s, mu);
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        const auto& dir = dirs[d];
        const double nrm =
            std::sqrt(dir.theta * dir.theta + std::pow(l2_norm(dir.v.values, mu), 2));
        if (nrm < 1e-14) {
            rep.probes.push_back({int(d), 0.0, false, "zero direction skipped"});
            continue;
        }
        const double first_order = a * dir.theta + pairing(p, dir.v, mu);
        double extreme = std::numeric_limits<double>::infinity();
        for (double h : h_seq) {
            std::vector<Vec> shifted = mu.points();
            for (std::size_t i = 0; i < shifted.size(); ++i) axpy(h, dir.v.values[i], shifted[i]);
            const double q =
                (phi(s + h * dir.theta, pushforward(mu, shifted)) - phi0) / h - first_order;
            extreme = std::min(extreme, super ? -q : q);
        }
        const double margin = extreme + eps * nrm;
        rep.probes.push_back({int(d), margin, true, ""});
        rep.worst_margin = std::min(rep.worst_margin, margin);
        ++rep.n_valid;
    }
    return rep;
}

struct ShiftProbe {
    double s2;
    ParticleMeasure mu2;
    TransportPlan pi;  // query -> mu2
    ThreePlan varpi;   // glued through the query with the anchor plan
};

namespace detail {

inline bool plans_agree(const TransportPlan& a, const TransportPlan& b, double tol = 1e-12) {
    std::map<std::pair<int, int>, double> ma, mb;
    for (const auto& e : a.entries) ma[{e.i, e.j}] += e.mass;
    for (const auto& e : b.entries) mb[{e.i, e.j}] += e.mass;
    for (const auto& [k, v] : ma)
        if (std::abs(v - (mb.count(k) ? mb[k] : 0.0)) > tol) return false;
    for (const auto& [k, v] : mb)
        if (!ma.count(k) && std::abs(v) > tol) return false;
    return true;
}

}  // namespace detail

// Verifies the envelope shift inequality: with exact minimization over a
// finite dictionary the Ekeland slack vanishes, so the right-hand side uses
// only the quadratic terms.
inline CheckReport shift_inequality_check(const ValueDictionary& dict, double s,
                                          const ParticleMeasure& mu, double kappa,
                                          const std::vector<ShiftProbe>& probes) {
    const auto my = moreau_yosida_inf(dict, s, mu, kappa);
    const double invk2 = 1.0 / (kappa * kappa);
    CheckReport rep;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const auto& probe = probes[p];
        if (!detail::plans_agree(probe.varpi.marginal12(), my.plan)) {
            rep.probes.push_back({int(p), 0.0, false, "(1,2) marginal is not the anchor plan"});
            continue;
        }
        if (!detail::plans_agree(probe.varpi.marginal13(), probe.pi)) {
            rep.probes.push_back({int(p), 0.0, false, "(1,3) marginal is not the probe plan"});
            continue;
        }
        double cross = 0.0;
        for (const auto& e : probe.varpi.entries) {
            const Vec xz = probe.varpi.first.point(e.i) - probe.varpi.second.point(e.j);
            const Vec dx = probe.varpi.third.point(e.k) - probe.varpi.first.point(e.i);
            cross += e.mass * dot(xz, dx);
        }
        const double ds = probe.s2 - s;
        const double rhs = my.value + invk2 * (s - my.anchor_t) * ds + invk2 * cross +
                           0.5 * invk2 * (ds * ds + probe.pi.squared_cost());
        const double lhs = moreau_yosida_inf(dict, probe.s2, probe.mu2, kappa).value;
        const double slack = rhs - lhs;
        rep.probes.push_back({int(p), slack, true, ""});
        rep.worst_margin = std::min(rep.worst_margin, slack);
        ++rep.n_valid;
    }
    return rep;
}

struct EnvelopeGapReport {
    double gap = 0.0;   // max over entries of value - phi_kappa
    double rho3 = 0.0;  // modulus-based bound
    std::vector<double> per_entry;
};

inline EnvelopeGapReport envelope_gap(const ValueDictionary& dict, double kappa) {
    EnvelopeGapReport rep;
    rep.rho3 = dict.rho3(kappa);
    for (std::size_t i = 0; i < dict.size(); ++i) {
        const auto& e = dict.entry(i);
        const double g = e.value - moreau_yosida_inf(dict, e.t, e.nu, kappa).value;
        rep.per_entry.push_back(g);
        rep.gap = std::max(rep.gap, g);
    }
    return rep;
}

struct ConeCheck {
    bool in_cone = false;
    double scale = 0.0;
};

// Checks whether gamma is induced by a map x -> c (F(x) - x)^T with
// (Id, F) # base optimal, at the supplied displacement scale c. positive_cone
// flips the covectors first (dis^+ membership).
inline ConeCheck displacement_cone_check(const CotangentSample& gamma, double scale = 1.0,
                                         bool positive_cone = false,
                                         const Tolerances& tol = default_tol()) {
    require(scale > 0.0, "cone check: scale must be positive");
    const CotangentSample g = positive_cone ? gamma.negated() : gamma;

    std::map<Vec, std::pair<Vec, double>> groups;  // x -> (q, mass)
    for (const auto& a : g.atoms()) {
        if (a.mass <= 0.0) continue;
        auto it = groups.find(a.x);
        if (it == groups.end()) {
            groups.emplace(a.x, std::make_pair(a.q, a.mass));
        } else {
            if (sqdist(it->second.first, a.q) > 1e-20) return {false, scale};  // not a map
            it->second.second += a.mass;
        }
    }

    double qmax = 0.0;
    for (const auto& [x, qm] : groups) qmax = std::max(qmax, norm(qm.first));
    if (qmax <= 1e-15) return {true, 0.0};

    std::vector<Vec> base_pts, targets;
    std::vector<double> masses;
    double cost2 = 0.0;
    for (const auto& [x, qm] : groups) {
        base_pts.push_back(x);
        Vec y = x;
        axpy(1.0 / scale, qm.first, y);
        targets.push_back(std::move(y));
        masses.push_back(qm.second);
        cost2 += qm.second * sqnorm(qm.first) / (scale * scale);
    }
    const ParticleMeasure base(base_pts, masses);
    const ParticleMeasure image(targets, masses);
    const double opt = wasserstein2_dist(base, image);
    return {std::sqrt(cost2) <= opt + tol.metric, scale};
}

}  // namespace proxaim
