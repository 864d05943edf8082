#include <catch2/catch_amalgamated.hpp>

#include "proxaim/measure.hpp"

using namespace proxaim;

TEST_CASE("measure invariants") {
    CHECK_THROWS_AS(ParticleMeasure({}, {}), error);
    CHECK_THROWS_AS(ParticleMeasure({{0.0}}, {0.5}), error);
    CHECK_THROWS_AS(ParticleMeasure({{0.0}, {1.0}}, {1.5, -0.5}), error);
    CHECK_THROWS_AS(ParticleMeasure({{std::nan("")}}, {1.0}), error);
    CHECK_NOTHROW(ParticleMeasure({{0.0}, {1.0}}, {0.25, 0.75}));
    // zero weights are allowed as long as the sum is one
    CHECK_NOTHROW(ParticleMeasure({{0.0}, {1.0}}, {0.0, 1.0}));
}

TEST_CASE("second_moment_root") {
    CHECK(second_moment_root(ParticleMeasure::dirac({0.0, 0.0})) == 0.0);
    CHECK(second_moment_root(ParticleMeasure::dirac({3.0, 4.0})) == Catch::Approx(5.0));
    const auto pair = ParticleMeasure::uniform({{0.0}, {2.0}});
    CHECK(second_moment_root(pair) == Catch::Approx(std::sqrt(2.0)));
}

TEST_CASE("pushforward") {
    const auto d0 = ParticleMeasure::dirac({0.0});
    const auto shifted = pushforward_map(d0, [](const Vec& x) { return Vec{x[0] + 1.0}; });
    CHECK(shifted.point(0)[0] == 1.0);
    CHECK(shifted.weight(0) == 1.0);

    const auto two = ParticleMeasure::uniform({{-1.0}, {1.0}});
    const auto ident = pushforward(two, two.points());
    CHECK(ident.same_support_as(two));

    // collapse to a single atom and merge weights
    const auto collapsed = pushforward_map(two, [](const Vec&) { return Vec{0.0}; }, true);
    REQUIRE(collapsed.size() == 1);
    CHECK(collapsed.weight(0) == Catch::Approx(1.0));
    CHECK(collapsed.point(0)[0] == 0.0);

    CHECK_THROWS_AS(pushforward(two, {{0.0}}), error);
}

TEST_CASE("pushforward merging preserves integrals") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const auto mu = random_measure(rng, 2, 5, 1.5, false);
        const auto images = [&] {
            std::vector<Vec> v;
            for (std::size_t i = 0; i < mu.size(); ++i)
                v.push_back({std::round(mu.point(i)[0]), std::round(mu.point(i)[1])});
            return v;
        }();
        const auto plain = pushforward(mu, images, false);
        const auto merged = pushforward(mu, images, true);
        auto integral = [](const ParticleMeasure& m) {
            double s = 0.0;
            for (std::size_t i = 0; i < m.size(); ++i)
                s += m.weight(i) * (std::sin(m.point(i)[0]) + m.point(i)[1] * m.point(i)[1]);
            return s;
        };
        CHECK(integral(plain) == Catch::Approx(integral(merged)).margin(1e-12));
    }
}

TEST_CASE("barycenter") {
    SECTION("deterministic disintegration reproduces the map") {
        const auto mu = ParticleMeasure::uniform({{0.0}, {1.0}, {2.0}});
        std::vector<CotangentAtom> atoms;
        for (std::size_t i = 0; i < mu.size(); ++i)
            atoms.push_back({mu.point(i), {3.0 * mu.point(i)[0]}, mu.weight(i)});
        const auto bc = barycenter(CotangentSample(std::move(atoms)));
        REQUIRE(bc.base.size() == 3);
        for (std::size_t i = 0; i < bc.base.size(); ++i)
            CHECK(bc.field.values[i][0] == Catch::Approx(3.0 * bc.base.point(i)[0]));
    }
    SECTION("symmetric covectors cancel") {
        CotangentSample g({{{0.0}, {1.0}, 0.5}, {{0.0}, {-1.0}, 0.5}});
        const auto bc = barycenter(g);
        REQUIRE(bc.base.size() == 1);
        CHECK(bc.field.values[0][0] == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("weighted mean") {
        CotangentSample g({{{0.0}, {4.0}, 0.25}, {{0.0}, {0.0}, 0.75}});
        const auto bc = barycenter(g);
        REQUIRE(bc.base.size() == 1);
        CHECK(bc.field.values[0][0] == Catch::Approx(1.0));
    }
}

TEST_CASE("barycenter contraction (Jensen)") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<CotangentAtom> atoms;
        const int n = 6;
        for (int i = 0; i < n; ++i)
            atoms.push_back({{g(rng), g(rng)}, {g(rng), g(rng)}, 1.0 / n});
        // duplicate a base point so the disintegration is non-trivial
        atoms[1].x = atoms[0].x;
        CotangentSample sample(std::move(atoms));
        double raw = 0.0;
        for (const auto& a : sample.atoms()) raw += a.mass * sqnorm(a.q);
        const auto bc = barycenter(sample);
        CHECK(l2_norm(bc.field.values, bc.base) <= std::sqrt(raw) + 1e-12);
    }
}
