#include <doctest.h>

#include <cmath>

#include "qtrack/optim.hpp"
#include "qtrack/rng.hpp"

using namespace qtrack;

namespace {

BoxBounds box(std::vector<double> lo, std::vector<double> hi) {
    return BoxBounds{std::move(lo), std::move(hi)};
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("1d parabola reaches the analytic minimum") {
    auto f = [](const std::vector<double>& x) { return (x[0] - 2.0) * (x[0] - 2.0); };
    for (auto method : {OptimMethod::QuasiNewtonBounded, OptimMethod::SimplexFallback}) {
        const auto res = minimize(f, {0.0}, box({0.0}, {5.0}), method);
        CHECK(std::abs(res.x[0] - 2.0) < 1e-6);
        CHECK(res.f < 1e-10);
        CHECK(res.converged);
    }
}

TEST_CASE("active bound minimum") {
    auto f = [](const std::vector<double>& x) { return x[0] * x[0]; };
    const auto res = minimize(f, {3.0}, box({1.0}, {5.0}));
    CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.f == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("2d quadratic, interior minimum checked against grid refinement") {
    auto f = [](const std::vector<double>& x) {
        return (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] + 0.5) * (x[1] + 0.5);
    };
    // independent oracle: coarse-to-fine grid search
    double gx = 0.0, gy = 0.0, gf = INFINITY;
    double cx = 0.0, cy = 0.0, half = 2.0;
    for (int level = 0; level < 30; ++level) {
        for (int a = -4; a <= 4; ++a)
            for (int b = -4; b <= 4; ++b) {
                const double px = std::clamp(cx + half * a / 4.0, -2.0, 2.0);
                const double py = std::clamp(cy + half * b / 4.0, -2.0, 2.0);
                const double fv = f({px, py});
                if (fv < gf) {
                    gf = fv;
                    gx = px;
                    gy = py;
                }
            }
        cx = gx;
        cy = gy;
        half *= 0.5;
    }
    const auto res = minimize(f, {0.0, 0.0}, box({-2.0, -2.0}, {2.0, 2.0}));
    CHECK(std::abs(res.x[0] - gx) < 1e-5);
    CHECK(std::abs(res.x[1] - gy) < 1e-5);
    CHECK(std::abs(res.x[0] - 1.0) < 1e-5);
    CHECK(std::abs(res.x[1] + 0.5) < 1e-5);
}

TEST_CASE("result.f never exceeds f(x0) and the trace is non-increasing") {
    Rng rng(derive_seed(31, "optim-trace"));
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 1 + rng.below(4);
        std::vector<double> shift(d), x0(d);
        for (std::size_t k = 0; k < d; ++k) {
            shift[k] = rng.uniform(-1.0, 1.0);
            x0[k] = rng.uniform(-2.0, 2.0);
        }
        auto f = [&](const std::vector<double>& x) {
            double v = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double t = x[k] - shift[k];
                v += (k + 1.0) * t * t + 0.3 * std::sin(3.0 * x[k]);
            }
            return v;
        };
        const auto method =
            rep % 2 ? OptimMethod::SimplexFallback : OptimMethod::QuasiNewtonBounded;
        const auto res = minimize(f, x0, box(std::vector<double>(d, -2.0),
                                             std::vector<double>(d, 2.0)),
                                  method);
        CHECK(res.f <= f(x0) + 1e-12);
        for (std::size_t i = 1; i < res.trace.size(); ++i)
            CHECK(res.trace[i].second <= res.trace[i - 1].second + 1e-12);
    }
}

TEST_CASE("every candidate point stays within bounds") {
    const BoxBounds b = box({-1.0, 0.5}, {1.0, 2.0});
    auto f = [&](const std::vector<double>& x) {
        REQUIRE(b.contains(x));
        return (x[0] - 0.9) * (x[0] - 0.9) + (x[1] - 0.6) * (x[1] - 0.6);
    };
    for (auto method : {OptimMethod::QuasiNewtonBounded, OptimMethod::SimplexFallback}) {
        const auto res = minimize(f, {0.0, 1.0}, b, method);
        CHECK(b.contains(res.x));
    }
}

TEST_CASE("x0 out of bounds is rejected") {
    auto f = [](const std::vector<double>& x) { return x[0]; };
    CHECK_THROWS_AS(minimize(f, {3.0}, box({0.0}, {1.0})), std::invalid_argument);
    CHECK_THROWS_AS(minimize(f, {0.5, 0.5}, box({0.0}, {1.0})), std::invalid_argument);
}

TEST_CASE("non-finite objective raises an error carrying the last good iterate") {
    int calls = 0;
    auto f = [&](const std::vector<double>& x) {
        ++calls;
        if (calls > 3) return std::nan("");
        return x[0] * x[0];
    };
    try {
        minimize(f, {2.0}, box({-4.0}, {4.0}));
        FAIL("expected OptimizationError");
    } catch (const OptimizationError& e) {
        CHECK(std::isfinite(e.last_good().f));
        CHECK(e.last_good().f <= 4.0);
    }
}

TEST_CASE("finite differences: parabola slope") {
    auto f = [](const std::vector<double>& x) { return x[0] * x[0]; };
    const auto g = finite_diff_gradient(f, {3.0}, 1e-5);
    CHECK(std::abs(g[0] - 6.0) < 1e-6);
}

TEST_CASE("finite differences: constant function") {
    auto f = [](const std::vector<double>&) { return 7.0; };
    const auto g = finite_diff_gradient(f, {1.0, -2.0, 0.3}, 1e-5);
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("finite differences match the analytic gradient of sin(x)*y") {
    auto f = [](const std::vector<double>& x) { return std::sin(x[0]) * x[1]; };
    const auto g = finite_diff_gradient(f, {0.3, 2.0}, 1e-5);
    CHECK(std::abs(g[0] - 2.0 * std::cos(0.3)) < 1e-5);
    CHECK(std::abs(g[1] - std::sin(0.3)) < 1e-5);
}

TEST_CASE("finite differences go one-sided at active bounds") {
    const BoxBounds b = box({0.0}, {1.0});
    auto f = [&](const std::vector<double>& x) {
        REQUIRE(b.contains(x));
        return 3.0 * x[0];
    };
    const auto g_lo = finite_diff_gradient(f, {0.0}, 1e-5, &b);
    const auto g_hi = finite_diff_gradient(f, {1.0}, 1e-5, &b);
    CHECK(std::abs(g_lo[0] - 3.0) < 1e-6);
    CHECK(std::abs(g_hi[0] - 3.0) < 1e-6);
}

TEST_CASE("gradient battery on smooth functions, 1e-4 absolute at h=1e-5") {
    Rng rng(derive_seed(32, "optim-grad"));
    for (int rep = 0; rep < 50; ++rep) {
        const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        const std::vector<double> x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        auto f = [&](const std::vector<double>& p) {
            return std::exp(a * p[0]) + std::cos(b * p[1]) + p[0] * p[1];
        };
        const auto g = finite_diff_gradient(f, x, 1e-5);
        CHECK(std::abs(g[0] - (a * std::exp(a * x[0]) + x[1])) < 1e-4);
        CHECK(std::abs(g[1] - (-b * std::sin(b * x[1]) + x[0])) < 1e-4);
    }
}

TEST_CASE("quadratic exactness within the evaluation budget") {
    Rng rng(derive_seed(33, "optim-quad"));
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t d = 1 + rng.below(5);
        // diagonal-dominant SPD quadratic with interior minimum
        std::vector<double> center(d), diag(d);
        for (std::size_t k = 0; k < d; ++k) {
            center[k] = rng.uniform(-1.0, 1.0);
            diag[k] = rng.uniform(0.5, 4.0);
        }
        const double cross = rng.uniform(-0.2, 0.2);
        auto f = [&](const std::vector<double>& x) {
            double v = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double t = x[k] - center[k];
                v += diag[k] * t * t;
                if (k + 1 < d) v += cross * t * (x[k + 1] - center[k + 1]);
            }
            return v;
        };
        std::vector<double> x0(d);
        for (std::size_t k = 0; k < d; ++k) x0[k] = rng.uniform(-2.0, 2.0);
        Tolerances tight;
        tight.f_tol = 1e-14;
        tight.g_tol = 1e-9;
        tight.max_evals = 100 * d;
        const auto res = minimize(f, x0, box(std::vector<double>(d, -3.0),
                                             std::vector<double>(d, 3.0)),
                                  OptimMethod::QuasiNewtonBounded, tight);
        CHECK(res.evaluations <= 100 * d);
        CHECK(res.f <= 1e-10);  // f* = 0 by construction
    }
}

TEST_CASE("termination within max_evals") {
    std::size_t calls = 0;
    auto f = [&](const std::vector<double>& x) {
        ++calls;
        return std::sin(5.0 * x[0]) + 0.1 * x[0] * x[0] + std::cos(3.0 * x[1]);
    };
    Tolerances tol;
    tol.max_evals = 37;
    tol.f_tol = 0.0;
    tol.g_tol = 0.0;
    const auto res = minimize(f, {1.0, 1.0}, box({-4.0, -4.0}, {4.0, 4.0}),
                              OptimMethod::QuasiNewtonBounded, tol);
    CHECK(calls <= 37);
    CHECK(res.evaluations == calls);
}

}  // TEST_SUITE
