#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <numeric>

#include "proxaim/transport.hpp"

using namespace proxaim;

namespace {

// Independent oracle: exhaustive minimization over all N! permutation
// matchings for equal-weight measures of the same size.
double w2_oracle(const ParticleMeasure& mu, const ParticleMeasure& nu) {
    REQUIRE(mu.size() == nu.size());
    const int n = int(mu.size());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (int i = 0; i < n; ++i) c += mu.weight(i) * sqdist(mu.point(i), nu.point(perm[i]));
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best);
}

}  // namespace

TEST_CASE("wasserstein2 on dirac pairs") {
    const auto a = ParticleMeasure::dirac({0.0, 0.0});
    const auto b = ParticleMeasure::dirac({3.0, 4.0});
    const auto r = wasserstein2(a, b);
    CHECK(r.dist == Catch::Approx(5.0));
    REQUIRE(r.plan.entries.size() == 1);
    CHECK(r.plan.entries[0].mass == Catch::Approx(1.0));
}

TEST_CASE("wasserstein2 identity") {
    const auto mu = ParticleMeasure::uniform({{0.0, 1.0}, {2.0, -1.0}});
    const auto r = wasserstein2(mu, mu);
    CHECK(r.dist == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("wasserstein2 shifted pair picks the parallel matching") {
    const auto mu = ParticleMeasure::uniform({{0.0}, {2.0}});
    const auto nu = ParticleMeasure::uniform({{1.0}, {3.0}});
    const auto r = wasserstein2(mu, nu);
    CHECK(r.dist == Catch::Approx(1.0));  // 0->1, 2->3 beats 0->3, 2->1
}

TEST_CASE("wasserstein2 input validation") {
    const auto a = ParticleMeasure::dirac({0.0});
    const auto b = ParticleMeasure::dirac({0.0, 0.0});
    CHECK_THROWS_AS(wasserstein2(a, b), error);
}

TEST_CASE("wasserstein2 handles zero weights and unequal sizes") {
    const ParticleMeasure mu({{0.0}, {5.0}}, {1.0, 0.0});
    const auto nu = ParticleMeasure::uniform({{1.0}, {-1.0}});
    const auto r = wasserstein2(mu, nu);
    CHECK(r.dist == Catch::Approx(1.0));
    for (const auto& e : r.plan.entries) CHECK(e.i == 0);
}

TEST_CASE("wasserstein2 agrees with the permutation oracle") {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> size_dist(1, 6);
    for (int rep = 0; rep < 120; ++rep) {
        const int n = size_dist(rng);
        const int d = 1 + (rep % 2);
        const auto mu = random_measure(rng, d, n);
        const auto nu = random_measure(rng, d, n);
        const auto r = wasserstein2(mu, nu);
        CHECK(std::abs(r.dist - w2_oracle(mu, nu)) <= 1e-9);
        r.plan.validate();
    }
}

TEST_CASE("wasserstein2 metric axioms on random triples") {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> size_dist(2, 6);
    for (int rep = 0; rep < 60; ++rep) {
        const int n = size_dist(rng);
        const auto a = random_measure(rng, 2, n);
        const auto b = random_measure(rng, 2, n);
        const auto c = random_measure(rng, 2, n);
        const double ab = wasserstein2_dist(a, b);
        const double ba = wasserstein2_dist(b, a);
        const double bc = wasserstein2_dist(b, c);
        const double ac = wasserstein2_dist(a, c);
        CHECK(std::abs(ab - ba) <= 1e-9);
        CHECK(ac <= ab + bc + 1e-9);
        CHECK(wasserstein2_dist(a, a) <= 1e-12);
    }
}

TEST_CASE("plan_norm dominates the distance") {
    SECTION("anti-diagonal plan") {
        const auto mu = ParticleMeasure::uniform({{0.0}, {1.0}});
        TransportPlan anti{mu, mu, {{0, 1, 0.5}, {1, 0, 0.5}}};
        anti.validate();
        CHECK(plan_norm(anti) == Catch::Approx(1.0));
        CHECK(plan_norm(anti) >= wasserstein2_dist(mu, mu) - 1e-9);
    }
    SECTION("diagonal plan on identical measures") {
        const auto mu = ParticleMeasure::uniform({{0.5, 0.0}, {-0.5, 2.0}});
        CHECK(plan_norm(diagonal_plan(mu)) == 0.0);
    }
    SECTION("optimal plan attains the distance") {
        std::mt19937_64 rng(303);
        for (int rep = 0; rep < 20; ++rep) {
            const auto mu = random_measure(rng, 2, 5, 2.0, false);
            const auto nu = random_measure(rng, 2, 4, 2.0, false);
            const auto r = wasserstein2(mu, nu);
            CHECK(plan_norm(r.plan) == Catch::Approx(r.dist).margin(1e-12));
        }
    }
    SECTION("random feasible plans stay above the distance") {
        std::mt19937_64 rng(404);
        for (int rep = 0; rep < 20; ++rep) {
            const auto mu = random_measure(rng, 1, 4);
            const auto nu = random_measure(rng, 1, 4);
            // independent coupling is always feasible
            TransportPlan prod{mu, nu, {}};
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    prod.entries.push_back({i, j, mu.weight(i) * nu.weight(j)});
            prod.validate();
            CHECK(plan_norm(prod) >= wasserstein2_dist(mu, nu) - 1e-9);
        }
    }
}

TEST_CASE("glue_plans") {
    SECTION("diagonal plans glue to the diagonal triple") {
        const auto mu = ParticleMeasure::uniform({{0.0}, {1.0}, {2.0}});
        const auto g = glue_plans(diagonal_plan(mu), diagonal_plan(mu));
        for (const auto& e : g.entries) {
            CHECK(e.i == e.j);
            CHECK(e.j == e.k);
        }
    }
    SECTION("deterministic maps glue atomwise") {
        const auto mu = ParticleMeasure::uniform({{0.0}, {1.0}});
        const auto nuF = pushforward_map(mu, [](const Vec& x) { return Vec{x[0] + 1.0}; });
        const auto nuH = pushforward_map(mu, [](const Vec& x) { return Vec{-x[0]}; });
        TransportPlan pF{mu, nuF, {{0, 0, 0.5}, {1, 1, 0.5}}};
        TransportPlan pH{mu, nuH, {{0, 0, 0.5}, {1, 1, 0.5}}};
        const auto g = glue_plans(pF, pH);
        REQUIRE(g.entries.size() == 2);
        for (const auto& e : g.entries) {
            CHECK(e.i == e.j);
            CHECK(e.i == e.k);
        }
    }
    SECTION("one source atom splitting in both plans gives product conditionals") {
        const auto mu = ParticleMeasure::dirac({0.0});
        const auto nu1 = ParticleMeasure::uniform({{-1.0}, {1.0}});
        const auto nu2 = ParticleMeasure::uniform({{-2.0}, {2.0}});
        TransportPlan p1{mu, nu1, {{0, 0, 0.5}, {0, 1, 0.5}}};
        TransportPlan p2{mu, nu2, {{0, 0, 0.5}, {0, 1, 0.5}}};
        const auto g = glue_plans(p1, p2);
        REQUIRE(g.entries.size() == 4);
        for (const auto& e : g.entries) CHECK(e.mass == Catch::Approx(0.25));
    }
    SECTION("marginals reproduce the inputs exactly") {
        std::mt19937_64 rng(505);
        for (int rep = 0; rep < 15; ++rep) {
            const auto mu = random_measure(rng, 2, 4, 2.0, false);
            const auto nu1 = random_measure(rng, 2, 3);
            const auto nu2 = random_measure(rng, 2, 5);
            const auto p1 = wasserstein2(mu, nu1).plan;
            const auto p2 = wasserstein2(mu, nu2).plan;
            const auto g = glue_plans(p1, p2);
            const auto m12 = g.marginal12();
            const auto m13 = g.marginal13();
            Tolerances tight;
            tight.marginal = 1e-12;
            m12.validate(tight);
            m13.validate(tight);
            CHECK(m12.squared_cost() == Catch::Approx(p1.squared_cost()).margin(1e-12));
            CHECK(m13.squared_cost() == Catch::Approx(p2.squared_cost()).margin(1e-12));
        }
    }
    SECTION("mismatched sources are rejected") {
        const auto mu = ParticleMeasure::dirac({0.0});
        const auto nu = ParticleMeasure::dirac({1.0});
        CHECK_THROWS_AS(glue_plans(diagonal_plan(mu), diagonal_plan(nu)), error);
    }
}
