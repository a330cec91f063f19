#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qtrack/anneal.hpp"
#include "qtrack/rng.hpp"

using namespace qtrack;

namespace {

QuboModel random_sparse(std::size_t n, Rng& rng, double density = 0.4) {
    QuboModel m(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.u01() < density) m.add_linear(i, rng.uniform(-2.0, 2.0));
        for (std::size_t j = 0; j < i; ++j)
            if (rng.u01() < density) m.add_quadratic(i, j, rng.uniform(-2.0, 2.0));
    }
    return m;
}

}  // namespace

TEST_SUITE("anneal") {

TEST_CASE("single favorable variable is switched on") {
    QuboModel m(1);
    m.add_linear(0, -1.0);
    for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
        SaConfig cfg;
        cfg.seed = seed;
        cfg.sweeps = 10;
        const auto sol = anneal(m, cfg);
        CHECK(sol.bits == Bits{1});
        CHECK(sol.energy == -1.0);
    }
}

TEST_CASE("all-zero model keeps the first visited assignment as best") {
    QuboModel m(6);
    SaConfig cfg;
    cfg.seed = 4;
    cfg.sweeps = 50;
    const Bits start{1, 0, 1, 1, 0, 0};
    const auto sol = anneal(m, cfg, &start);
    CHECK(sol.energy == 0.0);
    CHECK(sol.bits == start);
}

TEST_CASE("matches brute force on small sparse models for most seeds") {
    Rng rng(derive_seed(61, "anneal-bf"));
    const QuboModel m = random_sparse(10, rng);
    const auto exact = brute_force(m);
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SaConfig cfg;
        cfg.seed = seed;
        cfg.sweeps = 2000;
        const auto sol = anneal(m, cfg);
        if (std::abs(sol.energy - exact.best.energy) < 1e-9) ++hits;
    }
    CHECK(hits >= 9);
}

TEST_CASE("incremental energies agree with recomputation along the trajectory") {
    Rng rng(derive_seed(62, "anneal-incr"));
    const QuboModel m = random_sparse(12, rng, 0.5);
    SaConfig cfg;
    cfg.seed = 17;
    cfg.sweeps = 40;
    AnnealTrace trace;
    const auto sol = anneal(m, cfg, nullptr, &trace);
    CHECK(sol.energy == doctest::Approx(energy(m, sol.bits)).epsilon(1e-12));
    // best-ever is a lower bound on everything seen
    for (double e : trace.energies) CHECK(sol.energy <= e + 1e-9);
}

TEST_CASE("zero-temperature dynamics is greedy") {
    Rng rng(derive_seed(63, "anneal-greedy"));
    const QuboModel m = random_sparse(15, rng, 0.5);
    SaConfig cfg;
    cfg.seed = 3;
    cfg.sweeps = 60;
    cfg.t_start = 1e-9;
    cfg.t_end = 1e-9;
    AnnealTrace trace;
    anneal(m, cfg, nullptr, &trace);
    for (double d : trace.accepted_deltas) CHECK(d <= 0.0);
}

TEST_CASE("anneal is deterministic and respects an explicit start") {
    Rng rng(derive_seed(64, "anneal-det"));
    const QuboModel m = random_sparse(9, rng);
    SaConfig cfg;
    cfg.seed = 42;
    cfg.sweeps = 100;
    const auto a = anneal(m, cfg);
    const auto b = anneal(m, cfg);
    CHECK(a.bits == b.bits);
    CHECK(a.energy == b.energy);

    Bits bad(5, 0);
    CHECK_THROWS_AS(anneal(m, cfg, &bad), std::invalid_argument);
}

TEST_CASE("build_pool returns consistent, sorted, reproducible entries") {
    Rng rng(derive_seed(65, "anneal-pool"));
    const QuboModel m = random_sparse(6, rng);
    SaConfig cfg;
    cfg.seed = 11;
    cfg.sweeps = 200;
    const auto pool = build_pool(m, 20, cfg);
    REQUIRE(pool.entries.size() == 20);
    CHECK(pool.n == 6);
    for (const auto& sol : pool.entries)
        CHECK(sol.energy == doctest::Approx(energy(m, sol.bits)).epsilon(1e-9));
    for (std::size_t i = 1; i < pool.entries.size(); ++i) {
        const auto& prev = pool.entries[i - 1];
        const auto& cur = pool.entries[i];
        CHECK((prev.energy < cur.energy ||
               (prev.energy == cur.energy && prev.bits <= cur.bits)));
    }
    const auto again = build_pool(m, 20, cfg);
    for (std::size_t i = 0; i < 20; ++i) CHECK(again.entries[i].bits == pool.entries[i].bits);

    CHECK_THROWS_AS(build_pool(m, 1, cfg), std::invalid_argument);
}

TEST_CASE("pool best beats the random-assignment median") {
    Rng rng(derive_seed(66, "anneal-base"));
    const QuboModel m = random_sparse(12, rng, 0.5);
    SaConfig cfg;
    cfg.seed = 5;
    const auto pool = build_pool(m, 8, cfg);

    std::vector<double> random_energies;
    for (int rep = 0; rep < 20; ++rep) {
        Bits x(12);
        for (auto& b : x) b = rng.u01() < 0.5;
        random_energies.push_back(energy(m, x));
    }
    std::sort(random_energies.begin(), random_energies.end());
    const double median = random_energies[random_energies.size() / 2];
    CHECK(pool.best().energy <= median);
}

TEST_CASE("empty model short-circuits") {
    QuboModel m(0, 2.5);
    SaConfig cfg;
    const auto sol = anneal(m, cfg);
    CHECK(sol.bits.empty());
    CHECK(sol.energy == 2.5);
}

}  // TEST_SUITE
