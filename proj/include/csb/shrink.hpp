#ifndef CSB_SHRINK_HPP
#define CSB_SHRINK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csb/core.hpp"
#include "csb/loss.hpp"
#include "csb/models.hpp"
#include "csb/sampling.hpp"

namespace csb {

struct ShrinkConfig {
    double lambda = 1.3;
    std::size_t n = 1000;    // samples per iteration
    std::size_t imax = 500;  // outer iteration cap
    double eta = 0.5;        // fraction of lowest outputs kept for the histograms
    double xi = 0.5;         // bin survives when count >= xi * max bin count
    double delta = 0.95;     // stop when this fraction of outputs is inside the contour
    std::uint64_t seed = 0;
};

// Divisors r of n with 2 <= r <= n/10, ascending: the candidate bin counts.
// Coarse grids come first so every bin keeps as many samples as possible.
inline std::vector<std::size_t> bin_count_candidates(std::size_t n) {
    if (n < 20) throw std::invalid_argument("bin_count_candidates: n must be >= 20");
    std::vector<std::size_t> out;
    for (std::size_t r = 2; r * 10 <= n; ++r)
        if (n % r == 0) out.push_back(r);
    if (out.empty())
        throw std::invalid_argument("bin_count_candidates: n has no divisor in [2, n/10]");
    return out;
}

inline void validate(const ShrinkConfig& c) {
    if (!(c.lambda > 0.0)) throw std::invalid_argument("shrink: lambda must be positive");
    if (c.n < 20) throw std::invalid_argument("shrink: n must be >= 20");
    if (c.imax < 1) throw std::invalid_argument("shrink: imax must be >= 1");
    if (!(c.eta > 0.0 && c.eta <= 1.0)) throw std::invalid_argument("shrink: eta must be in (0,1]");
    if (std::llround(c.eta * static_cast<double>(c.n)) < 1)
        throw std::invalid_argument("shrink: eta*n rounds to zero kept samples");
    if (!(c.xi > 0.0 && c.xi < 1.0)) throw std::invalid_argument("shrink: xi must be in (0,1)");
    if (!(c.delta > 0.0 && c.delta <= 1.0))
        throw std::invalid_argument("shrink: delta must be in (0,1]");
    bin_count_candidates(c.n);  // throws when n admits no histogram grid
}

// Histogram cut for one factor. Partition `current` into n_bins equal-width
// bins, count the samples landing in each, drop every bin with fewer than
// xi * (largest count) samples, and return the span of the sample values that
// survive. Samples exactly on the upper edge belong to the last bin.
inline Interval csb_histogram(const std::vector<double>& samples, std::size_t n_bins, double xi,
                              const Interval& current) {
    if (samples.empty()) throw std::logic_error("csb_histogram: empty sample list");
    if (n_bins < 2) throw std::invalid_argument("csb_histogram: need at least two bins");
    const double w = current.width();
    if (!(w > 0.0)) return current;  // degenerate interval: nothing to cut

    const auto nb = static_cast<double>(n_bins);
    std::vector<std::size_t> count(n_bins, 0);
    std::vector<std::size_t> bin_of(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const double rel = (samples[s] - current.lower) / w;
        auto b = static_cast<long long>(rel * nb);
        b = std::clamp<long long>(b, 0, static_cast<long long>(n_bins) - 1);
        bin_of[s] = static_cast<std::size_t>(b);
        ++count[static_cast<std::size_t>(b)];
    }
    const std::size_t max_count = *std::max_element(count.begin(), count.end());
    const double cutoff = xi * static_cast<double>(max_count);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples.size(); ++s) {
        if (static_cast<double>(count[bin_of[s]]) < cutoff) continue;
        lo = std::min(lo, samples[s]);
        hi = std::max(hi, samples[s]);
    }
    // at least the fullest bin always survives, so the span is well defined
    return Interval(lo, hi);
}

// Shift an interval that lost the nominal value back toward it, moving both
// ends by a tenth of the midpoint between the nominal and the far bound.
inline std::pair<double, double> protect_criteria(double lower, double upper, double x_hat_i) {
    if (lower > x_hat_i) {
        const double shift = 0.1 * (x_hat_i + upper) / 2.0;
        return {x_hat_i - shift, upper - shift};
    }
    const double shift = 0.1 * (x_hat_i + lower) / 2.0;
    return {lower + shift, x_hat_i + shift};
}

// Re-parameterization on a stalled iteration: try the next (finer) histogram
// grid; once the grids are exhausted, restart from the coarsest grid with a
// harder sample trim, never keeping fewer than 20 rows.
inline std::pair<std::size_t, std::size_t> change_parameters(
    std::size_t psi, std::size_t tau, const std::vector<std::size_t>& n_bins_list,
    std::size_t n) {
    if (tau + 1 <= n_bins_list.size()) return {tau + 1, psi};
    const double ratio = static_cast<double>(psi) / static_cast<double>(n);
    auto next = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * std::pow(ratio, 1.1)));
    next = std::max<std::size_t>(next, 20);
    return {std::size_t{1}, next};
}

struct ShrinkIterationRecord {
    std::size_t iteration = 0;  // 1-based outer loop counter
    Orthotope box;              // box in force after this iteration
    double fraction_below = 0.0;
    std::size_t psi = 0;        // rows kept for the histograms (0 on the converged record)
    std::size_t bins_used = 0;  // bin count of the accepted cut (last tried if stalled)
    std::vector<std::size_t> protected_factors;
    std::vector<std::size_t> shift_retry_factors;  // protect shift halved or clamped
    bool stalled = false;  // inner loop gave up without changing the box
};

enum class ShrinkTermination { converged, imax };

struct ShrinkTrace {
    std::vector<ShrinkIterationRecord> iterations;
    std::uint64_t eval_count = 0;
    ShrinkTermination termination = ShrinkTermination::imax;
    ThresholdSpec threshold;
};

struct CsbResult {
    Orthotope box;
    ShrinkTrace trace;
};

namespace detail {

// protect_criteria as written can overshoot for nominals close to the far
// bound (or with mixed signs); retry with half shifts, then clamp to the
// nominal as a last resort.
inline Interval protect_with_retry(double lower, double upper, double x, bool& retried) {
    retried = false;
    double shift;
    if (lower > x)
        shift = 0.1 * (x + upper) / 2.0;
    else
        shift = 0.1 * (x + lower) / 2.0;
    for (std::size_t attempt = 0; attempt < 7; ++attempt) {
        double lo, hi;
        if (lower > x) {
            lo = x - shift;
            hi = upper - shift;
        } else {
            lo = lower + shift;
            hi = x + shift;
        }
        if (lo <= hi && lo <= x && x <= hi) {
            retried = attempt > 0;
            return Interval(lo, hi);
        }
        shift *= 0.5;
        retried = true;
    }
    return Interval(std::min(lower, x), std::max(upper, x));
}

}  // namespace detail

// Iterative uncertainty-based interval shrink. Starting from the promissory
// box, each iteration draws a fresh Latin-hypercube sample, keeps the rows
// with the lowest dissimilarity, and tightens every factor interval to the
// span of the surviving histogram bins, protecting the nominal point. Stops
// when delta of the outputs fall inside the contour, or after imax rounds.
inline CsbResult csb_estimate(const ModelDefinition& model, const FactorVector& x_hat,
                              const Orthotope& promissory, const TimeGrid& grid,
                              const ShrinkConfig& cfg = {}, const LossConfig& loss_cfg = {},
                              const IntegratorConfig& integ = {}, EvalCounter* counter = nullptr,
                              unsigned threads = 1) {
    validate(cfg);
    if (!contains(promissory, x_hat))
        throw std::invalid_argument("csb_estimate: nominal point outside the starting box");

    EvalCounter local;
    DissimilarityObjective phi(model, reference_trajectory(model, x_hat, grid, integ), loss_cfg,
                               integ, &local);

    CsbResult result;
    result.trace.threshold = threshold(phi.reference(), cfg.lambda, loss_cfg);
    const double thr = result.trace.threshold.threshold_value;
    const auto eta_count =
        static_cast<std::size_t>(std::llround(cfg.eta * static_cast<double>(cfg.n)));
    const std::vector<std::size_t> n_bins = bin_count_candidates(cfg.n);
    const std::size_t k = promissory.dim();

    Orthotope theta = promissory;
    for (std::size_t c = 1; c <= cfg.imax; ++c) {
        McResult mc = monte_carlo(phi, theta, cfg.n, cfg.seed + c, threads);
        std::size_t eps = 0;
        while (eps < mc.outputs.size() && mc.outputs[eps] <= thr) ++eps;
        const double fraction = static_cast<double>(eps) / static_cast<double>(cfg.n);

        ShrinkIterationRecord rec;
        rec.iteration = c;
        rec.fraction_below = fraction;

        if (fraction >= cfg.delta) {
            rec.box = theta;
            result.trace.iterations.push_back(std::move(rec));
            result.trace.termination = ShrinkTermination::converged;
            break;
        }

        std::size_t psi = std::max(eps, eta_count);
        std::size_t tau = 1;
        std::vector<double> column(psi);
        bool recort = true;
        bool stalled = false;
        while (recort) {
            rec.protected_factors.clear();
            rec.shift_retry_factors.clear();
            std::vector<Interval> cut(k);
            for (std::size_t i = 0; i < k; ++i) {
                column.resize(psi);
                for (std::size_t r = 0; r < psi; ++r) column[r] = mc.matrix.at(r, i);
                Interval iv = csb_histogram(column, n_bins[tau - 1], cfg.xi, theta.intervals[i]);
                if (iv.lower > x_hat[i] || iv.upper < x_hat[i]) {
                    bool retried = false;
                    iv = detail::protect_with_retry(iv.lower, iv.upper, x_hat[i], retried);
                    rec.protected_factors.push_back(i);
                    if (retried) rec.shift_retry_factors.push_back(i);
                }
                cut[i] = iv;
            }
            Orthotope candidate(theta.factor_names, std::move(cut));
            if (candidate == theta) {
                const auto [tau2, psi2] = change_parameters(psi, tau, n_bins, cfg.n);
                if (tau2 == 1 && psi2 == psi) {
                    // grids exhausted and the trim cannot tighten further; let the
                    // next iteration resample instead of spinning here
                    stalled = true;
                    recort = false;
                } else {
                    tau = tau2;
                    psi = psi2;
                }
            } else {
                theta = std::move(candidate);
                recort = false;
            }
        }

        rec.box = theta;
        rec.psi = psi;
        rec.bins_used = n_bins[tau - 1];
        rec.stalled = stalled;
        result.trace.iterations.push_back(std::move(rec));
    }

    result.box = std::move(theta);
    result.trace.eval_count = local.evals.load();
    if (counter) {
        counter->evals.fetch_add(local.evals.load(), std::memory_order_relaxed);
        counter->failures.fetch_add(local.failures.load(), std::memory_order_relaxed);
    }
    return result;
}

}  // namespace csb

#endif
