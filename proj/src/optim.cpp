#include "qtrack/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace qtrack {

void BoxBounds::validate() const {
    if (lower.size() != upper.size())
        throw std::invalid_argument("bounds vectors differ in length");
    if (lower.empty()) throw std::invalid_argument("bounds must have dimension >= 1");
    for (std::size_t k = 0; k < lower.size(); ++k) {
        if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]))
            throw std::invalid_argument("bounds must be finite");
        if (lower[k] > upper[k]) throw std::invalid_argument("lower bound exceeds upper bound");
    }
}

bool BoxBounds::contains(const std::vector<double>& x) const {
    if (x.size() != lower.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k)
        if (x[k] < lower[k] || x[k] > upper[k]) return false;
    return true;
}

std::vector<double> BoxBounds::clip(std::vector<double> x) const {
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = std::clamp(x[k], lower[k], upper[k]);
    return x;
}

namespace {

constexpr double kGradStep = 1e-5;
constexpr double kArmijoC1 = 1e-4;

class EvalCounter {
public:
    EvalCounter(const Objective& f, std::size_t budget) : f_(f), budget_(budget) {}

    // returns NaN once the budget is exhausted; non-finite objective values throw
    double operator()(const std::vector<double>& x, const OptimResult& last_good) {
        if (count_ >= budget_) {
            exhausted_ = true;
            return std::nan("");
        }
        ++count_;
        const double v = f_(x);
        if (!std::isfinite(v)) {
            OptimResult carry = last_good;
            carry.evaluations = count_;
            throw OptimizationError("objective returned a non-finite value", carry);
        }
        return v;
    }

    std::size_t count() const { return count_; }
    bool exhausted() const { return exhausted_; }
    std::size_t remaining() const { return budget_ > count_ ? budget_ - count_ : 0; }

private:
    const Objective& f_;
    std::size_t budget_;
    std::size_t count_ = 0;
    bool exhausted_ = false;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double inf_norm(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

// gradient with the evaluation counter threaded through; one-sided at bounds
bool counted_gradient(EvalCounter& eval, const std::vector<double>& x, double fx,
                      const BoxBounds& bounds, const OptimResult& last_good,
                      std::vector<double>& g) {
    const std::size_t d = x.size();
    g.assign(d, 0.0);
    std::vector<double> p = x;
    for (std::size_t k = 0; k < d; ++k) {
        const double lo = bounds.lower[k];
        const double hi = bounds.upper[k];
        const double room_up = hi - x[k];
        const double room_dn = x[k] - lo;
        double v = 0.0;
        if (room_up >= kGradStep && room_dn >= kGradStep) {
            p[k] = x[k] + kGradStep;
            const double fp = eval(p, last_good);
            p[k] = x[k] - kGradStep;
            const double fm = eval(p, last_good);
            p[k] = x[k];
            if (eval.exhausted()) return false;
            v = (fp - fm) / (2.0 * kGradStep);
        } else if (room_up >= kGradStep) {
            p[k] = x[k] + kGradStep;
            const double fp = eval(p, last_good);
            p[k] = x[k];
            if (eval.exhausted()) return false;
            v = (fp - fx) / kGradStep;
        } else if (room_dn >= kGradStep) {
            p[k] = x[k] - kGradStep;
            const double fm = eval(p, last_good);
            p[k] = x[k];
            if (eval.exhausted()) return false;
            v = (fx - fm) / kGradStep;
        } else {
            v = 0.0;  // interval narrower than the step: treat as fixed
        }
        g[k] = v;
    }
    return true;
}

OptimResult lbfgs_projected(const Objective& objective, const std::vector<double>& x0,
                            const BoxBounds& bounds, const Tolerances& tol,
                            std::size_t budget) {
    const std::size_t d = x0.size();
    constexpr std::size_t kHistory = 10;

    OptimResult res;
    res.x = x0;
    EvalCounter eval(objective, budget);
    res.f = eval(x0, res);
    res.trace.push_back({0, res.f});

    std::vector<double> g;
    if (!counted_gradient(eval, res.x, res.f, bounds, res, g)) {
        res.evaluations = eval.count();
        return res;
    }

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    std::size_t small_f_steps = 0;

    for (std::size_t iter = 1;; ++iter) {
        // projected-gradient stationarity
        std::vector<double> pg(d);
        for (std::size_t k = 0; k < d; ++k)
            pg[k] = res.x[k] - std::clamp(res.x[k] - g[k], bounds.lower[k], bounds.upper[k]);
        if (inf_norm(pg) <= tol.g_tol) {
            res.converged = true;
            break;
        }
        if (eval.remaining() == 0) break;

        // two-loop recursion
        std::vector<double> dir(g);
        std::vector<double> alpha(s_hist.size());
        for (std::size_t idx = s_hist.size(); idx-- > 0;) {
            alpha[idx] = rho_hist[idx] * dot(s_hist[idx], dir);
            for (std::size_t k = 0; k < d; ++k) dir[k] -= alpha[idx] * y_hist[idx][k];
        }
        if (!s_hist.empty()) {
            const double gamma =
                dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (auto& v : dir) v *= gamma;
        }
        for (std::size_t idx = 0; idx < s_hist.size(); ++idx) {
            const double beta = rho_hist[idx] * dot(y_hist[idx], dir);
            for (std::size_t k = 0; k < d; ++k) dir[k] += s_hist[idx][k] * (alpha[idx] - beta);
        }
        for (auto& v : dir) v = -v;
        if (dot(dir, g) >= 0.0) {  // not a descent direction, fall back to steepest
            for (std::size_t k = 0; k < d; ++k) dir[k] = -g[k];
        }

        // backtracking line search along the projected path
        double t = 1.0;
        std::vector<double> x_new;
        double f_new = 0.0;
        bool accepted = false;
        while (eval.remaining() > 0 && t >= 1e-14) {
            std::vector<double> cand(d);
            for (std::size_t k = 0; k < d; ++k)
                cand[k] = std::clamp(res.x[k] + t * dir[k], bounds.lower[k], bounds.upper[k]);
            std::vector<double> step(d);
            for (std::size_t k = 0; k < d; ++k) step[k] = cand[k] - res.x[k];
            const double decrease = dot(g, step);
            if (inf_norm(step) == 0.0) break;
            const double fc = eval(cand, res);
            if (eval.exhausted()) break;
            if (decrease < 0.0 && fc <= res.f + kArmijoC1 * decrease) {
                x_new = std::move(cand);
                f_new = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!s_hist.empty()) {  // retry from a fresh steepest-descent state
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                if (eval.remaining() > 0 && !eval.exhausted()) continue;
            }
            break;
        }

        std::vector<double> g_new;
        if (!counted_gradient(eval, x_new, f_new, bounds, res, g_new)) {
            res.x = std::move(x_new);
            res.f = f_new;
            res.trace.push_back({iter, res.f});
            break;
        }

        std::vector<double> s(d), y(d);
        for (std::size_t k = 0; k < d; ++k) {
            s[k] = x_new[k] - res.x[k];
            y[k] = g_new[k] - g[k];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * inf_norm(s) * inf_norm(y)) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > kHistory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const double f_prev = res.f;
        res.x = std::move(x_new);
        res.f = f_new;
        g = std::move(g_new);
        res.trace.push_back({iter, res.f});

        if (std::abs(f_prev - res.f) <= tol.f_tol * std::max(1.0, std::abs(res.f))) {
            if (++small_f_steps >= 2) {
                res.converged = true;
                break;
            }
        } else {
            small_f_steps = 0;
        }
    }

    res.evaluations = eval.count();
    return res;
}

OptimResult nelder_mead(const Objective& objective, const std::vector<double>& x0,
                        const BoxBounds& bounds, const Tolerances& tol, std::size_t budget) {
    const std::size_t d = x0.size();
    OptimResult res;
    res.x = x0;
    EvalCounter eval(objective, budget);
    res.f = eval(x0, res);
    res.trace.push_back({0, res.f});

    struct Vertex {
        std::vector<double> x;
        double f;
    };
    std::vector<Vertex> simplex;
    simplex.push_back({x0, res.f});
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> v = x0;
        double step = 0.05 * (bounds.upper[k] - bounds.lower[k]);
        if (step == 0.0) step = 0.1;
        if (v[k] + step > bounds.upper[k]) step = -step;
        v[k] = std::clamp(v[k] + step, bounds.lower[k], bounds.upper[k]);
        const double fv = eval(v, res);
        if (eval.exhausted()) {
            res.evaluations = eval.count();
            return res;
        }
        simplex.push_back({std::move(v), fv});
    }

    auto order = [&] {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };
    order();

    constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
    for (std::size_t iter = 1; eval.remaining() > 0; ++iter) {
        if (simplex.back().f - simplex.front().f <=
            tol.f_tol * std::max(1.0, std::abs(simplex.front().f))) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(d, 0.0);
        for (std::size_t v = 0; v + 1 < simplex.size(); ++v)
            for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[v].x[k];
        for (auto& c : centroid) c /= static_cast<double>(d);

        auto make_point = [&](double coeff) {
            std::vector<double> p(d);
            for (std::size_t k = 0; k < d; ++k)
                p[k] = std::clamp(centroid[k] + coeff * (centroid[k] - simplex.back().x[k]),
                                  bounds.lower[k], bounds.upper[k]);
            return p;
        };

        auto reflected = make_point(kReflect);
        const double f_r = eval(reflected, res);
        if (eval.exhausted()) break;

        if (f_r < simplex.front().f) {
            auto expanded = make_point(kExpand);
            const double f_e = eval(expanded, res);
            if (eval.exhausted()) break;
            if (f_e < f_r)
                simplex.back() = {std::move(expanded), f_e};
            else
                simplex.back() = {std::move(reflected), f_r};
        } else if (f_r < simplex[simplex.size() - 2].f) {
            simplex.back() = {std::move(reflected), f_r};
        } else {
            auto contracted = make_point(-kContract);
            const double f_c = eval(contracted, res);
            if (eval.exhausted()) break;
            if (f_c < simplex.back().f) {
                simplex.back() = {std::move(contracted), f_c};
            } else {
                bool ok = true;
                for (std::size_t v = 1; v < simplex.size(); ++v) {
                    for (std::size_t k = 0; k < d; ++k)
                        simplex[v].x[k] = std::clamp(
                            simplex.front().x[k] +
                                kShrink * (simplex[v].x[k] - simplex.front().x[k]),
                            bounds.lower[k], bounds.upper[k]);
                    simplex[v].f = eval(simplex[v].x, res);
                    if (eval.exhausted()) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) break;
            }
        }
        order();
        if (simplex.front().f < res.f) {
            res.x = simplex.front().x;
            res.f = simplex.front().f;
            res.trace.push_back({iter, res.f});
        }
    }

    if (simplex.front().f < res.f) {
        res.x = simplex.front().x;
        res.f = simplex.front().f;
    }
    res.evaluations = eval.count();
    return res;
}

}  // namespace

OptimResult minimize(const Objective& objective, const std::vector<double>& x0,
                     const BoxBounds& bounds, OptimMethod method, const Tolerances& tol) {
    bounds.validate();
    if (x0.size() != bounds.dim()) throw std::invalid_argument("x0 dimension mismatch");
    if (!bounds.contains(x0)) throw std::invalid_argument("x0 out of bounds");

    const std::size_t budget = tol.max_evals > 0 ? tol.max_evals : 200 * x0.size();
    if (method == OptimMethod::SimplexFallback)
        return nelder_mead(objective, x0, bounds, tol, budget);
    return lbfgs_projected(objective, x0, bounds, tol, budget);
}

std::vector<double> finite_diff_gradient(const Objective& objective,
                                         const std::vector<double>& x, double step,
                                         const BoxBounds* bounds) {
    if (step <= 0.0) throw std::invalid_argument("step must be positive");
    const std::size_t d = x.size();
    auto eval = [&](const std::vector<double>& p) {
        const double v = objective(p);
        if (!std::isfinite(v))
            throw std::invalid_argument("objective returned a non-finite value");
        return v;
    };
    std::vector<double> g(d, 0.0);
    std::vector<double> p = x;
    double fx = 0.0;
    bool have_fx = false;
    for (std::size_t k = 0; k < d; ++k) {
        const double room_up = bounds ? bounds->upper[k] - x[k] : step;
        const double room_dn = bounds ? x[k] - bounds->lower[k] : step;
        if (room_up >= step && room_dn >= step) {
            p[k] = x[k] + step;
            const double fp = eval(p);
            p[k] = x[k] - step;
            const double fm = eval(p);
            g[k] = (fp - fm) / (2.0 * step);
        } else {
            if (!have_fx) {
                fx = eval(x);
                have_fx = true;
            }
            if (room_up >= step) {
                p[k] = x[k] + step;
                g[k] = (eval(p) - fx) / step;
            } else if (room_dn >= step) {
                p[k] = x[k] - step;
                g[k] = (fx - eval(p)) / step;
            } else {
                g[k] = 0.0;
            }
        }
        p[k] = x[k];
    }
    return g;
}

}  // namespace qtrack
