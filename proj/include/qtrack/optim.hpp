#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qtrack {

using Objective = std::function<double(const std::vector<double>&)>;

struct BoxBounds {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return lower.size(); }
    void validate() const;
    bool contains(const std::vector<double>& x) const;
    std::vector<double> clip(std::vector<double> x) const;
};

enum class OptimMethod {
    QuasiNewtonBounded,  // limited-memory BFGS with gradient projection
    SimplexFallback,     // derivative-free Nelder-Mead, candidates clipped to the box
};

struct Tolerances {
    double f_tol = 1e-9;
    double g_tol = 1e-6;
    std::size_t max_evals = 0;  // 0 means 200 * dim
};

struct OptimResult {
    std::vector<double> x;
    double f = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
    std::vector<std::pair<std::size_t, double>> trace;  // (iteration, f) of accepted iterates
};

// Thrown when the objective returns a non-finite value; carries the last
// good iterate so callers can still recover a usable point.
class OptimizationError : public std::runtime_error {
public:
    OptimizationError(const std::string& what, OptimResult last_good)
        : std::runtime_error(what), last_good_(std::move(last_good)) {}
    const OptimResult& last_good() const { return last_good_; }

private:
    OptimResult last_good_;
};

OptimResult minimize(const Objective& objective, const std::vector<double>& x0,
                     const BoxBounds& bounds, OptimMethod method = OptimMethod::QuasiNewtonBounded,
                     const Tolerances& tol = {});

// Central differences, switching to one-sided steps at active bounds.
std::vector<double> finite_diff_gradient(const Objective& objective,
                                         const std::vector<double>& x, double step,
                                         const BoxBounds* bounds = nullptr);

}  // namespace qtrack
