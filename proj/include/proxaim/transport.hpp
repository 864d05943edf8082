#pragma once
// Exact discrete optimal transport with squared Euclidean ground cost, solved
// as a transportation problem on the dense bipartite support graph by a
// primal network simplex. No entropic smoothing.

#include <algorithm>
#include <map>
#include <numeric>
#include <utility>

#include "proxaim/measure.hpp"

namespace proxaim {

struct PlanEntry {
    int i;
    int j;
    double mass;
};

// Coupling between two particle measures, stored sparsely as (i, j, mass).
struct TransportPlan {
    ParticleMeasure source;
    ParticleMeasure target;
    std::vector<PlanEntry> entries;

    void validate(const Tolerances& tol = default_tol()) const {
        std::vector<double> row(source.size(), 0.0), col(target.size(), 0.0);
        for (const auto& e : entries) {
            require(e.i >= 0 && e.i < int(source.size()) && e.j >= 0 && e.j < int(target.size()),
                    "plan: index out of range");
            require(std::isfinite(e.mass) && e.mass >= 0.0, "plan: mass must be >= 0");
            row[e.i] += e.mass;
            col[e.j] += e.mass;
        }
        for (std::size_t i = 0; i < row.size(); ++i)
            require(std::abs(row[i] - source.weight(i)) <= tol.marginal,
                    "plan: row marginal mismatch");
        for (std::size_t j = 0; j < col.size(); ++j)
            require(std::abs(col[j] - target.weight(j)) <= tol.marginal,
                    "plan: column marginal mismatch");
    }

    double squared_cost() const {
        double c = 0.0;
        for (const auto& e : entries) c += e.mass * sqdist(source.point(e.i), target.point(e.j));
        return c;
    }
};

// ||pi|| = (int |x1-x2|^2 dpi)^{1/2}
inline double plan_norm(const TransportPlan& pi) { return std::sqrt(pi.squared_cost()); }

inline TransportPlan diagonal_plan(const ParticleMeasure& mu) {
    TransportPlan p{mu, mu, {}};
    for (std::size_t i = 0; i < mu.size(); ++i)
        p.entries.push_back({int(i), int(i), mu.weight(i)});
    return p;
}

namespace detail {

// Dense transportation simplex. Supplies/demands are positive reals; returns
// flows on the bipartite arcs. Entering rule: most negative reduced cost,
// ties to the lowest arc id. Leaving rule: last blocking arc along the cycle
// starting from the apex (keeps the tree strongly feasible).
class TransportSimplex {
public:
    TransportSimplex(const std::vector<double>& supply, const std::vector<double>& demand,
                     const std::vector<double>& cost /* m*n row-major */)
        : m_(int(supply.size())), n_(int(demand.size())), cost_(cost) {
        const int nodes = m_ + n_ + 1;
        root_ = m_ + n_;
        n_arcs_ = m_ * n_ + m_ + n_;
        flow_.assign(n_arcs_, 0.0);
        in_tree_.assign(n_arcs_, false);
        parent_.assign(nodes, -1);
        parent_arc_.assign(nodes, -1);
        depth_.assign(nodes, 0);
        pi_.assign(nodes, 0.0);

        double cmax = 0.0;
        for (double c : cost_) cmax = std::max(cmax, std::abs(c));
        big_ = 2.0 * (1.0 + cmax);
        eps_ = 1e-12 * (1.0 + cmax);

        for (int k = 0; k < m_ + n_; ++k) {
            const int a = m_ * n_ + k;
            in_tree_[a] = true;
            flow_[a] = (k < m_) ? supply[k] : demand[k - m_];
        }
        rebuild_tree();
    }

    // Runs pivots to optimality; throws on stall.
    void solve() {
        const long max_pivots = 64L * n_arcs_ + 4096;
        for (long it = 0; it < max_pivots; ++it) {
            const int e = entering_arc();
            if (e < 0) {
                double leftover = 0.0;
                for (int k = 0; k < m_ + n_; ++k) leftover += flow_[m_ * n_ + k];
                require(leftover <= 1e-9, "transport: solver stalled with artificial flow");
                return;
            }
            pivot(e);
        }
        throw error("transport: pivot limit exceeded (solver did not converge)");
    }

    double flow(int i, int j) const { return flow_[i * n_ + j]; }

private:
    int arc_tail(int a) const {
        if (a < m_ * n_) return a / n_;
        const int k = a - m_ * n_;
        return (k < m_) ? k : root_;
    }
    int arc_head(int a) const {
        if (a < m_ * n_) return m_ + (a % n_);
        const int k = a - m_ * n_;
        return (k < m_) ? root_ : k;
    }
    double arc_cost(int a) const { return (a < m_ * n_) ? cost_[a] : big_; }

    void rebuild_tree() {
        const int nodes = m_ + n_ + 1;
        std::vector<std::vector<int>> adj(nodes);
        for (int a = 0; a < n_arcs_; ++a) {
            if (!in_tree_[a]) continue;
            adj[arc_tail(a)].push_back(a);
            adj[arc_head(a)].push_back(a);
        }
        std::vector<int> stack{root_};
        std::vector<char> seen(nodes, 0);
        seen[root_] = 1;
        parent_[root_] = -1;
        parent_arc_[root_] = -1;
        depth_[root_] = 0;
        pi_[root_] = 0.0;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int a : adj[u]) {
                const int w = (arc_tail(a) == u) ? arc_head(a) : arc_tail(a);
                if (seen[w]) continue;
                seen[w] = 1;
                parent_[w] = u;
                parent_arc_[w] = a;
                depth_[w] = depth_[u] + 1;
                pi_[w] = (arc_head(a) == w) ? pi_[u] + arc_cost(a) : pi_[u] - arc_cost(a);
                stack.push_back(w);
            }
        }
        for (int v = 0; v < nodes; ++v) require(seen[v], "transport: basis tree disconnected");
    }

    int entering_arc() const {
        int best = -1;
        double best_rc = -eps_;
        for (int a = 0; a < m_ * n_; ++a) {
            if (in_tree_[a]) continue;
            const double rc = cost_[a] + pi_[arc_tail(a)] - pi_[arc_head(a)];
            if (rc < best_rc) {
                best_rc = rc;
                best = a;
            }
        }
        return best;
    }

    void pivot(int e) {
        int u = arc_tail(e), v = arc_head(e);
        // climb to the common apex
        int x = u, y = v;
        while (depth_[x] > depth_[y]) x = parent_[x];
        while (depth_[y] > depth_[x]) y = parent_[y];
        while (x != y) {
            x = parent_[x];
            y = parent_[y];
        }
        const int apex = x;

        // cycle arcs in flow direction: apex -> u, entering, v -> apex
        struct Leg {
            int arc;
            int dir;  // +1 flow increases, -1 decreases
        };
        std::vector<Leg> up_side;  // collected u -> apex, reversed below
        for (int w = u; w != apex; w = parent_[w]) {
            const int a = parent_arc_[w];
            // traversal direction on this side is parent -> w
            up_side.push_back({a, arc_head(a) == w ? +1 : -1});
        }
        std::vector<Leg> cycle(up_side.rbegin(), up_side.rend());
        cycle.push_back({e, +1});
        for (int w = v; w != apex; w = parent_[w]) {
            const int a = parent_arc_[w];
            // traversal direction on this side is w -> parent
            cycle.push_back({a, arc_tail(a) == w ? +1 : -1});
        }

        double delta = std::numeric_limits<double>::infinity();
        for (const Leg& leg : cycle)
            if (leg.dir < 0) delta = std::min(delta, flow_[leg.arc]);
        require(std::isfinite(delta), "transport: unbounded pivot");

        int leaving = -1;
        for (const Leg& leg : cycle)
            if (leg.dir < 0 && flow_[leg.arc] <= delta) leaving = leg.arc;
        require(leaving >= 0, "transport: no leaving arc");

        for (const Leg& leg : cycle) flow_[leg.arc] += leg.dir * delta;
        in_tree_[leaving] = false;
        in_tree_[e] = true;
        rebuild_tree();
    }

    int m_, n_, root_, n_arcs_;
    std::vector<double> cost_;
    double big_, eps_;
    std::vector<double> flow_;
    std::vector<char> in_tree_;
    std::vector<int> parent_, parent_arc_, depth_;
    std::vector<double> pi_;
};

}  // namespace detail

struct W2Result {
    double dist;
    TransportPlan plan;
};

// Exact W2 distance and an optimal plan. Rejects dimension mismatches and
// solver stalls; never returns a feasible-but-unverified plan.
inline W2Result wasserstein2(const ParticleMeasure& mu, const ParticleMeasure& nu,
                             const Tolerances& tol = default_tol()) {
    require(mu.dimension() == nu.dimension(), "wasserstein2: dimension mismatch");

    // drop zero-mass atoms, remember original indices
    std::vector<int> si, tj;
    std::vector<double> a, b;
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (mu.weight(i) > 0.0) {
            si.push_back(int(i));
            a.push_back(mu.weight(i));
        }
    for (std::size_t j = 0; j < nu.size(); ++j)
        if (nu.weight(j) > 0.0) {
            tj.push_back(int(j));
            b.push_back(nu.weight(j));
        }
    const int m = int(a.size()), n = int(b.size());

    TransportPlan plan{mu, nu, {}};
    if (m == 1) {
        for (int j = 0; j < n; ++j) plan.entries.push_back({si[0], tj[j], b[j]});
    } else if (n == 1) {
        for (int i = 0; i < m; ++i) plan.entries.push_back({si[i], tj[0], a[i]});
    } else {
        std::vector<double> cost(std::size_t(m) * n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                cost[std::size_t(i) * n + j] = sqdist(mu.point(si[i]), nu.point(tj[j]));
        detail::TransportSimplex simplex(a, b, cost);
        simplex.solve();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                const double f = simplex.flow(i, j);
                if (f > 0.0) plan.entries.push_back({si[i], tj[j], f});
            }
    }
    plan.validate(tol);
    return {std::sqrt(plan.squared_cost()), plan};
}

inline double wasserstein2_dist(const ParticleMeasure& mu, const ParticleMeasure& nu) {
    return wasserstein2(mu, nu).dist;
}

// Three-marginal coupling produced by gluing two plans through their common
// source.
struct ThreePlanEntry {
    int i, j, k;
    double mass;
};

struct ThreePlan {
    ParticleMeasure first;   // common source mu
    ParticleMeasure second;  // target of the first plan
    ParticleMeasure third;   // target of the second plan
    std::vector<ThreePlanEntry> entries;

    TransportPlan marginal12() const { return project(first, second, 0, 1); }
    TransportPlan marginal13() const { return project(first, third, 0, 2); }
    TransportPlan marginal23() const { return project(second, third, 1, 2); }

private:
    TransportPlan project(const ParticleMeasure& a, const ParticleMeasure& b, int u, int v) const {
        std::map<std::pair<int, int>, double> acc;
        for (const auto& e : entries) {
            const int idx[3] = {e.i, e.j, e.k};
            acc[{idx[u], idx[v]}] += e.mass;
        }
        TransportPlan p{a, b, {}};
        for (const auto& [ij, mass] : acc) p.entries.push_back({ij.first, ij.second, mass});
        return p;
    }
};

// Conditional-independence gluing: disintegrate both plans over the shared
// source and take product conditionals.
inline ThreePlan glue_plans(const TransportPlan& bar /* mu -> nu_bar */,
                            const TransportPlan& pi /* mu -> nu */) {
    require(bar.source.same_support_as(pi.source), "glue_plans: plans must share the source");
    const std::size_t m = bar.source.size();
    std::vector<std::vector<const PlanEntry*>> by_i_bar(m), by_i_pi(m);
    for (const auto& e : bar.entries)
        if (e.mass > 0.0) by_i_bar[e.i].push_back(&e);
    for (const auto& e : pi.entries)
        if (e.mass > 0.0) by_i_pi[e.i].push_back(&e);

    ThreePlan out{bar.source, bar.target, pi.target, {}};
    for (std::size_t i = 0; i < m; ++i) {
        const double w = bar.source.weight(i);
        if (w <= 0.0) continue;
        for (const PlanEntry* eb : by_i_bar[i])
            for (const PlanEntry* ep : by_i_pi[i])
                out.entries.push_back({int(i), eb->j, ep->j, eb->mass * ep->mass / w});
    }
    return out;
}

}  // namespace proxaim
