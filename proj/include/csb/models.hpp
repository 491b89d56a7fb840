#ifndef CSB_MODELS_HPP
#define CSB_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csb/core.hpp"

namespace csb {

using State = std::vector<double>;

// A deterministic dynamic model. Factors are the quantities subject to
// estimation (rate parameters and initial conditions alike); the observable
// maps a state vector to the scalar that is compared against data.
struct ModelDefinition {
    std::string name;
    std::vector<std::string> factor_names;
    std::size_t state_dim = 0;
    std::function<State(const FactorVector&)> initial_state;
    std::function<void(double t, const State& y, const FactorVector& x, State& dydt)> rhs;
    std::function<double(const State&)> observable;
};

struct IntegratorConfig {
    double rel_tol = 1e-6;
    double abs_tol = 1e-8;
    std::size_t max_steps = 100000;
};

enum class IntegrationStatus { ok, step_limit, non_finite };

struct IntegrationResult {
    IntegrationStatus status = IntegrationStatus::non_finite;
    Trajectory observed;  // valid only when status == ok

    bool ok() const { return status == IntegrationStatus::ok; }
};

namespace detail {

inline bool all_finite(const State& y) {
    for (double v : y)
        if (!std::isfinite(v)) return false;
    return true;
}

// Weighted RMS norm used by the step controller.
inline double error_norm(const State& err, const State& y0, const State& y1,
                         double rel_tol, double abs_tol) {
    double acc = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double sc = abs_tol + rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace detail

// Embedded Dormand-Prince 5(4) pair with proportional step control and cubic
// Hermite interpolation for off-step output points. The last stage reuses the
// first evaluation of the next step (FSAL).
inline IntegrationResult integrate(const ModelDefinition& model, const FactorVector& x,
                                   const TimeGrid& grid, const IntegratorConfig& cfg = {}) {
    if (x.size() != model.factor_names.size())
        throw std::invalid_argument("integrate: factor vector size mismatch");
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0))
        throw std::invalid_argument("integrate: tolerances must be positive");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("integrate: non-finite factor");

    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // difference between 5th- and 4th-order weights (error estimate)
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

    IntegrationResult out;
    const std::size_t n = model.state_dim;
    const double t_begin = grid.points.front();
    const double t_end = grid.points.back();
    const double span = t_end - t_begin;

    State y = model.initial_state(x);
    if (y.size() != n) throw std::logic_error("integrate: initial_state size mismatch");
    if (!detail::all_finite(y)) return out;

    std::vector<double> values;
    values.reserve(grid.size());
    std::size_t next_out = 0;
    while (next_out < grid.size() && grid.points[next_out] <= t_begin) {
        values.push_back(model.observable(y));
        ++next_out;
    }

    State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    State ytmp(n), ynew(n), err(n);

    double t = t_begin;
    model.rhs(t, y, x, k1);
    if (!detail::all_finite(k1)) return out;

    // starting step: crude but safe, the controller corrects it within a few steps
    double h = span / 100.0;
    {
        double fmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
            fmax = std::max(fmax, std::abs(k1[i]) / sc);
        }
        if (fmax > 0.0) h = std::min(h, 0.01 / fmax);
        h = std::max(h, span * 1e-12);
    }

    std::size_t steps = 0;
    while (t < t_end) {
        if (++steps > cfg.max_steps) {
            out.status = IntegrationStatus::step_limit;
            return out;
        }
        h = std::min(h, t_end - t);
        if (!(h > std::abs(t) * 1e-14 + 1e-300)) return out;  // stalled

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        model.rhs(t + c2 * h, ytmp, x, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        model.rhs(t + c3 * h, ytmp, x, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        model.rhs(t + c4 * h, ytmp, x, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        model.rhs(t + c5 * h, ytmp, x, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                  a65 * k5[i]);
        model.rhs(t + h, ytmp, x, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        model.rhs(t + h, ynew, x, k7);

        bool finite = detail::all_finite(ynew) && detail::all_finite(k7);
        double enorm = 0.0;
        if (finite) {
            for (std::size_t i = 0; i < n; ++i)
                err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                              e7 * k7[i]);
            enorm = detail::error_norm(err, y, ynew, cfg.rel_tol, cfg.abs_tol);
            finite = std::isfinite(enorm);
        }

        if (!finite) {
            // a non-finite trial at a vanishing step means the state itself blew up
            h *= 0.2;
            if (!(h > std::abs(t) * 1e-14 + 1e-300)) return out;
            continue;
        }

        if (enorm <= 1.0) {
            const double t_new = t + h;
            // emit every requested point inside (t, t_new] before advancing
            while (next_out < grid.size() && grid.points[next_out] <= t_new) {
                const double tg = grid.points[next_out];
                if (tg == t_new) {
                    values.push_back(model.observable(ynew));
                } else {
                    const double s = (tg - t) / h;
                    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
                    const double h10 = s * (1 - s) * (1 - s);
                    const double h01 = s * s * (3 - 2 * s);
                    const double h11 = s * s * (s - 1);
                    for (std::size_t i = 0; i < n; ++i)
                        ytmp[i] = h00 * y[i] + h10 * h * k1[i] + h01 * ynew[i] + h11 * h * k7[i];
                    values.push_back(model.observable(ytmp));
                }
                ++next_out;
            }
            t = t_new;
            y.swap(ynew);
            k1.swap(k7);
            const double factor =
                enorm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 5.0);
            h *= factor;
        } else {
            h *= std::clamp(0.9 * std::pow(enorm, -0.2), 0.2, 0.9);
        }
    }

    if (next_out != grid.size()) return out;  // grid point past t_end slipped through
    for (double v : values)
        if (!std::isfinite(v)) return out;  // observable blew up even though states stayed finite
    out.status = IntegrationStatus::ok;
    out.observed = Trajectory(grid, std::move(values));
    return out;
}

// Vector-borne transmission model with five states (M_s, M_i, H_s, H_i, H_r)
// and nine estimated factors. Total human population stays constant at
// `total_humans`; the remaining human initial conditions follow from it and
// from `initial_infected_humans`. Total mosquito population M = M_s + M_i is
// recomputed at every evaluation. Observable: infected humans H_i.
inline ModelDefinition dengue_model(double total_humans = 340000.0,
                                    double initial_infected_humans = 100.0) {
    if (!(total_humans > 0.0))
        throw std::invalid_argument("dengue_model: total_humans must be positive");
    ModelDefinition m;
    m.name = "dengue";
    m.factor_names = {"M_s0", "M_i0", "H_s0", "Lambda_v", "beta_m",
                      "mu_m", "beta_h", "mu_h",  "gamma_h"};
    m.state_dim = 5;
    const double H = total_humans;
    const double Hi0 = initial_infected_humans;
    m.initial_state = [H, Hi0](const FactorVector& x) {
        return State{x[0], x[1], x[2], Hi0, H - x[2] - Hi0};
    };
    m.rhs = [H](double, const State& y, const FactorVector& x, State& d) {
        const double Ms = y[0], Mi = y[1], Hs = y[2], Hi = y[3], Hr = y[4];
        const double lambda_v = x[3], beta_m = x[4], mu_m = x[5];
        const double beta_h = x[6], mu_h = x[7], gamma_h = x[8];
        const double M = Ms + Mi;
        d[0] = lambda_v - beta_m * Hi * Ms / H - mu_m * Ms;
        d[1] = beta_m * Hi * Ms / H - mu_m * Mi;
        d[2] = mu_h * H - beta_h * Mi * Hs / M - mu_h * Hs;
        d[3] = beta_h * Mi * Hs / M - (mu_h + gamma_h) * Hi;
        d[4] = gamma_h * Hi - mu_h * Hr;
    };
    m.observable = [](const State& y) { return y[3]; };
    return m;
}

namespace detail {

inline ModelDefinition algebraic_model(std::string name, std::vector<std::string> factors,
                                       std::function<double(const FactorVector&)> g) {
    ModelDefinition m;
    m.name = std::move(name);
    m.factor_names = std::move(factors);
    m.state_dim = 1;
    m.initial_state = [g = std::move(g)](const FactorVector& x) { return State{g(x)}; };
    m.rhs = [](double, const State&, const FactorVector&, State& d) { d[0] = 0.0; };
    m.observable = [](const State& y) { return y[0]; };
    return m;
}

}  // namespace detail

// Small analytic models with hand-checkable behaviour, handy as ground truth
// in tests. Each one is constant in time.
inline ModelDefinition identity_model() {
    return detail::algebraic_model("identity", {"x1"},
                                   [](const FactorVector& x) { return x[0]; });
}

inline ModelDefinition additive_model() {
    return detail::algebraic_model("additive", {"x1", "x2"},
                                   [](const FactorVector& x) { return x[0] + 2.0 * x[1]; });
}

inline ModelDefinition interaction_model() {
    return detail::algebraic_model("interaction", {"x1", "x2"},
                                   [](const FactorVector& x) { return x[0] * x[1]; });
}

inline std::vector<ModelDefinition> test_models() {
    return {identity_model(), additive_model(), interaction_model()};
}

}  // namespace csb

#endif
