#ifndef CSB_OAT_HPP
#define CSB_OAT_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "csb/core.hpp"
#include "csb/loss.hpp"
#include "csb/models.hpp"

namespace csb {

struct OatConfig {
    double lambda = 1.3;  // output-inflation multiplier defining the contour
    double up = 1.5;      // geometric ratio for the away-from-nominal ladder
    double down = 0.7;    // geometric ratio for the toward-zero ladder
    std::size_t imax = 100;
    double band = 1.1;  // acceptance band: threshold < phi <= band*threshold
};

inline void validate(const OatConfig& c) {
    if (!(c.lambda > 0.0)) throw std::invalid_argument("oat: lambda must be positive");
    if (!(c.up > 1.0 && c.up <= 2.0)) throw std::invalid_argument("oat: up must be in (1,2]");
    if (!(c.down > 0.0 && c.down < 1.0)) throw std::invalid_argument("oat: down must be in (0,1)");
    if (c.imax < 1) throw std::invalid_argument("oat: imax must be >= 1");
    if (!(c.band > 1.0)) throw std::invalid_argument("oat: band must exceed 1");
}

struct OatBoundDiag {
    double value = 0.0;  // accepted factor value for this direction
    double phi = 0.0;    // dissimilarity recorded at acceptance (last evaluation)
    bool resolved = false;
    std::size_t ladder_steps = 0;
    std::size_t bisect_steps = 0;
};

struct OatFactorDiag {
    OatBoundDiag away;    // gamma = up, magnitude grows
    OatBoundDiag toward;  // gamma = down, magnitude shrinks
    bool additive_fallback = false;
};

struct OatResult {
    Orthotope box;
    ThresholdSpec threshold;
    std::vector<OatFactorDiag> factors;
};

namespace detail {

inline double eval_with(const DissimilarityObjective& phi, FactorVector x, std::size_t i,
                        double value) {
    x[i] = value;
    return phi(x);
}

struct BandHit {
    double value = 0.0;
    double phi = 0.0;
    bool resolved = false;
    std::size_t steps = 0;
};

// Halve the value interval [a,b] (phi(a) inside the contour, phi(b) beyond the
// band) until the evaluation lands in (threshold, band*threshold], or give up
// after imax halvings and keep the midpoint.
inline BandHit bisect_to_band(const DissimilarityObjective& phi, const FactorVector& x_hat,
                              std::size_t i, double a, double b, double thr, double band,
                              std::size_t imax, bool check_bracket = true) {
    if (check_bracket) {
        const double ya = eval_with(phi, x_hat, i, a);
        const double yb = eval_with(phi, x_hat, i, b);
        if (!(ya <= thr) || !(yb > band * thr))
            throw std::logic_error("bisection: invalid bracket");
    }
    BandHit hit;
    double delta = 0.5 * (a + b);
    for (std::size_t step = 1; step <= imax; ++step) {
        const double y = eval_with(phi, x_hat, i, delta);
        hit.steps = step;
        hit.phi = y;
        if (y > thr && y <= band * thr) {
            hit.value = delta;
            hit.resolved = true;
            return hit;
        }
        if (y <= thr)
            a = delta;
        else
            b = delta;
        delta = 0.5 * (a + b);
    }
    hit.value = delta;
    hit.resolved = false;
    return hit;
}

// One direction of the one-at-a-time search. rung(tau) gives the trial value
// for exponent tau >= 0 (rung(0) is the nominal itself).
template <typename Rung>
OatBoundDiag ladder_search(const DissimilarityObjective& phi, const FactorVector& x_hat,
                           std::size_t i, Rung&& rung, double thr, double band,
                           std::size_t imax) {
    OatBoundDiag d;
    double last_value = rung(0);
    double last_phi = 0.0;
    for (std::size_t tau = 0; tau < imax; ++tau) {
        const double v = rung(tau + 1);
        const double y = eval_with(phi, x_hat, i, v);
        d.ladder_steps = tau + 1;
        last_value = v;
        last_phi = y;
        if (y > band * thr) {
            BandHit hit = bisect_to_band(phi, x_hat, i, rung(tau), v, thr, band, imax,
                                         /*check_bracket=*/false);
            d.value = hit.value;
            d.phi = hit.phi;
            d.resolved = hit.resolved;
            d.bisect_steps = hit.steps;
            return d;
        }
        if (y > thr) {
            d.value = v;
            d.phi = y;
            d.resolved = true;
            return d;
        }
    }
    // never left the contour: keep the last rung, flagged
    d.value = last_value;
    d.phi = last_phi;
    d.resolved = false;
    return d;
}

}  // namespace detail

// Faithful single-call form of the band bisection: the bracket is the pair of
// geometric rungs (gamma^tau, gamma^(tau+1)) scaled by the nominal value.
inline double bisection(const DissimilarityObjective& phi, const FactorVector& x_hat,
                        std::size_t factor_index, double gamma, std::size_t tau,
                        const ThresholdSpec& thr, double band, std::size_t imax,
                        bool* resolved = nullptr) {
    const double a = std::pow(gamma, static_cast<double>(tau)) * x_hat[factor_index];
    const double b = std::pow(gamma, static_cast<double>(tau + 1)) * x_hat[factor_index];
    detail::BandHit hit = detail::bisect_to_band(phi, x_hat, factor_index, a, b,
                                                 thr.threshold_value, band, imax);
    if (resolved) *resolved = hit.resolved;
    return hit.value;
}

// One-at-a-time promissory search box. For every factor, walk a geometric
// ladder away from the nominal (ratio `up`) and toward zero (ratio `down`),
// bisecting into the acceptance band once the contour is crossed. A zero
// nominal degenerates the multiplicative ladder, so those factors fall back
// to offsets of (gamma^tau - 1) times the original search-interval width,
// which requires `search_box`.
inline OatResult promissory_box(const ModelDefinition& model, const FactorVector& x_hat,
                                const TimeGrid& grid, const OatConfig& cfg = {},
                                const LossConfig& loss_cfg = {},
                                const IntegratorConfig& integ = {},
                                EvalCounter* counter = nullptr,
                                const Orthotope* search_box = nullptr) {
    validate(cfg);
    if (x_hat.size() != model.factor_names.size())
        throw std::invalid_argument("promissory_box: factor vector size mismatch");
    if (search_box && search_box->dim() != x_hat.size())
        throw std::invalid_argument("promissory_box: search box dimension mismatch");

    DissimilarityObjective phi(model, reference_trajectory(model, x_hat, grid, integ), loss_cfg,
                               integ, counter);
    ThresholdSpec thr = threshold(phi.reference(), cfg.lambda, loss_cfg);

    const std::size_t k = x_hat.size();
    OatResult out;
    out.threshold = thr;
    out.factors.resize(k);
    std::vector<Interval> intervals(k);

    for (std::size_t i = 0; i < k; ++i) {
        OatFactorDiag& diag = out.factors[i];
        const double xi = x_hat[i];
        if (xi == 0.0) {
            if (!search_box)
                throw std::invalid_argument(
                    "promissory_box: zero nominal for factor '" + model.factor_names[i] +
                    "' needs the original search box to set an additive step");
            const double w = search_box->intervals[i].width();
            if (!(w > 0.0))
                throw std::invalid_argument("promissory_box: zero-width search interval for '" +
                                            model.factor_names[i] + "'");
            diag.additive_fallback = true;
            auto rung_up = [&](std::size_t tau) {
                return xi + (std::pow(cfg.up, static_cast<double>(tau)) - 1.0) * w;
            };
            auto rung_down = [&](std::size_t tau) {
                return xi + (std::pow(cfg.down, static_cast<double>(tau)) - 1.0) * w;
            };
            diag.away = detail::ladder_search(phi, x_hat, i, rung_up, thr.threshold_value,
                                              cfg.band, cfg.imax);
            diag.toward = detail::ladder_search(phi, x_hat, i, rung_down, thr.threshold_value,
                                                cfg.band, cfg.imax);
        } else {
            auto rung_up = [&](std::size_t tau) {
                return std::pow(cfg.up, static_cast<double>(tau)) * xi;
            };
            auto rung_down = [&](std::size_t tau) {
                return std::pow(cfg.down, static_cast<double>(tau)) * xi;
            };
            diag.away = detail::ladder_search(phi, x_hat, i, rung_up, thr.threshold_value,
                                              cfg.band, cfg.imax);
            diag.toward = detail::ladder_search(phi, x_hat, i, rung_down, thr.threshold_value,
                                                cfg.band, cfg.imax);
        }
        // for positive nominals `away` is the upper bound; negative nominals flip
        const double lo = std::min(diag.away.value, diag.toward.value);
        const double hi = std::max(diag.away.value, diag.toward.value);
        intervals[i] = Interval(std::min(lo, xi), std::max(hi, xi));
    }

    out.box = Orthotope(model.factor_names, std::move(intervals));
    return out;
}

}  // namespace csb

#endif
