#ifndef CSB_ESTIMATION_HPP
#define CSB_ESTIMATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csb/core.hpp"
#include "csb/loss.hpp"
#include "csb/models.hpp"
#include "csb/rng.hpp"
#include "csb/sampling.hpp"

namespace csb {

struct FitResult {
    FactorVector x_star;
    double final_loss = std::numeric_limits<double>::infinity();
    FactorVector start_point;
    bool converged = false;
    std::uint64_t eval_count = 0;
};

struct FitOptions {
    double tol = 1e-6;            // stop when the simplex f-spread drops below this
    std::size_t max_evals = 1000; // hard budget per start
    IntegratorConfig integrator{};
    unsigned threads = 1;
};

namespace detail {

inline FactorVector clamp_to_box(FactorVector x, const Orthotope& box) {
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::clamp(x[i], box.intervals[i].lower, box.intervals[i].upper);
    return x;
}

struct NmOutcome {
    FactorVector x;
    double f = std::numeric_limits<double>::infinity();
    std::uint64_t evals = 0;
    bool converged = false;
};

// Nelder-Mead simplex descent constrained to a box by clamping every trial
// point. Restarts with a tighter simplex when the current one collapses
// before the budget or the tolerance is reached.
template <typename F>
NmOutcome nelder_mead_bounded(F&& f, const Orthotope& box, const FactorVector& x0, double tol,
                              std::size_t max_evals) {
    const std::size_t k = box.dim();
    NmOutcome out;
    auto eval = [&](const FactorVector& x) {
        ++out.evals;
        return f(x);
    };

    std::vector<FactorVector> v;   // simplex vertices
    std::vector<double> fv;        // their objective values
    double step_scale = 0.05;

    auto build_simplex = [&](const FactorVector& center) {
        v.assign(1, center);
        fv.assign(1, eval(center));
        for (std::size_t i = 0; i < k; ++i) {
            FactorVector p = center;
            const Interval& iv = box.intervals[i];
            double step = step_scale * iv.width();
            if (step == 0.0) step = step_scale * std::max(1.0, std::abs(center[i]));
            if (center[i] + step > iv.upper) step = -step;
            p[i] = std::clamp(center[i] + step, iv.lower, iv.upper);
            v.push_back(p);
            fv.push_back(eval(p));
        }
    };
    build_simplex(detail::clamp_to_box(x0, box));

    std::vector<std::size_t> idx(k + 1);
    while (out.evals < max_evals) {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = idx[0], worst = idx[k];
        const std::size_t second_worst = k >= 1 ? idx[k - 1] : worst;

        if (std::isfinite(fv[best]) && fv[worst] - fv[best] <= tol) {
            out.converged = true;
            break;
        }

        // collapse: all vertices numerically indistinguishable but f-spread remains
        double diam = 0.0;
        for (std::size_t j = 1; j <= k; ++j)
            for (std::size_t i = 0; i < k; ++i) {
                const double w = box.intervals[i].width();
                const double d = std::abs(v[idx[j]][i] - v[best][i]) / (w > 0.0 ? w : 1.0);
                diam = std::max(diam, d);
            }
        if (diam < 1e-12) {
            step_scale *= 0.5;
            if (step_scale < 1e-10) break;
            if (out.evals + k + 1 > max_evals) break;  // no room to rebuild
            FactorVector center = v[best];
            build_simplex(center);
            continue;
        }

        FactorVector centroid(k, 0.0);
        for (std::size_t j = 0; j <= k; ++j) {
            if (idx[j] == worst) continue;
            for (std::size_t i = 0; i < k; ++i) centroid[i] += v[idx[j]][i];
        }
        for (double& c : centroid) c /= static_cast<double>(k);

        auto along = [&](double t) {  // centroid + t*(centroid - worst), clamped
            FactorVector p(k);
            for (std::size_t i = 0; i < k; ++i)
                p[i] = centroid[i] + t * (centroid[i] - v[worst][i]);
            return detail::clamp_to_box(std::move(p), box);
        };

        FactorVector xr = along(1.0);
        const double fr = eval(xr);
        if (out.evals >= max_evals) {
            if (fr < fv[worst]) {  // keep a late improvement before stopping
                v[worst] = std::move(xr);
                fv[worst] = fr;
            }
            break;
        }

        if (fr < fv[best]) {
            FactorVector xe = along(2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                v[worst] = std::move(xe);
                fv[worst] = fe;
            } else {
                v[worst] = std::move(xr);
                fv[worst] = fr;
            }
        } else if (fr < fv[second_worst]) {
            v[worst] = std::move(xr);
            fv[worst] = fr;
        } else {
            FactorVector xc;
            double fc;
            if (fr < fv[worst]) {
                xc = along(0.5);  // outside contraction
                fc = eval(xc);
                if (fc <= fr) {
                    v[worst] = std::move(xc);
                    fv[worst] = fc;
                    continue;
                }
            } else {
                xc = along(-0.5);  // inside contraction
                fc = eval(xc);
                if (fc < fv[worst]) {
                    v[worst] = std::move(xc);
                    fv[worst] = fc;
                    continue;
                }
            }
            // shrink toward the best vertex
            for (std::size_t j = 0; j <= k; ++j) {
                if (idx[j] == best) continue;
                if (out.evals >= max_evals) break;
                for (std::size_t i = 0; i < k; ++i)
                    v[idx[j]][i] = v[best][i] + 0.5 * (v[idx[j]][i] - v[best][i]);
                fv[idx[j]] = eval(v[idx[j]]);
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t j = 1; j <= k; ++j)
        if (fv[j] < fv[best]) best = j;
    out.x = v[best];
    out.f = fv[best];
    return out;
}

}  // namespace detail

// Repeated local least-squares estimation from uniformly drawn start points.
// Returns one result per start (start order preserved); an empty list means
// every start failed to produce a finite loss.
inline std::vector<FitResult> multi_start_fit(const ModelDefinition& model, const Trajectory& data,
                                              const Orthotope& box, std::size_t n_starts,
                                              std::uint64_t seed, const LossConfig& loss_cfg = {},
                                              const FitOptions& opts = {},
                                              EvalCounter* counter = nullptr) {
    if (n_starts < 1) throw std::invalid_argument("multi_start_fit: n_starts must be >= 1");
    const std::size_t k = box.dim();
    if (model.factor_names.size() != k)
        throw std::invalid_argument("multi_start_fit: box dimension mismatch");

    RngStream rng = substream(seed, "fit-starts");
    std::vector<FactorVector> starts(n_starts, FactorVector(k));
    for (auto& s : starts)
        for (std::size_t i = 0; i < k; ++i)
            s[i] = rng.uniform(box.intervals[i].lower, box.intervals[i].upper);

    std::vector<FitResult> results(n_starts);
    detail::parallel_for(n_starts, opts.threads, [&](std::size_t j) {
        DissimilarityObjective phi(model, data, loss_cfg, opts.integrator, counter);
        detail::NmOutcome nm =
            detail::nelder_mead_bounded(phi, box, starts[j], opts.tol, opts.max_evals);
        results[j] = FitResult{std::move(nm.x), nm.f, starts[j], nm.converged, nm.evals};
    });

    const bool any_finite = std::any_of(results.begin(), results.end(), [](const FitResult& r) {
        return std::isfinite(r.final_loss);
    });
    if (!any_finite) return {};
    return results;
}

// Keep the fits whose loss is within tolerance_fraction of the batch minimum.
inline std::vector<FitResult> filter_fits(const std::vector<FitResult>& results,
                                          double tolerance_fraction = 0.10) {
    if (results.empty()) throw std::invalid_argument("filter_fits: empty result list");
    double min_loss = std::numeric_limits<double>::infinity();
    for (const auto& r : results) min_loss = std::min(min_loss, r.final_loss);
    const double cutoff = (1.0 + tolerance_fraction) * min_loss;
    std::vector<FitResult> kept;
    for (const auto& r : results)
        if (r.final_loss <= cutoff) kept.push_back(r);
    return kept;
}

struct MedianCi {
    std::vector<Interval> intervals;  // median +- 1.96*sqrt(pi/2)*sigma/sqrt(n)
    std::vector<double> sigma;        // per-factor sample standard deviation
    std::size_t n_filtered = 0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Median-centered confidence interval over a batch of filtered fits. The
// sqrt(pi/2) factor widens the usual standard error to the median's.
inline std::pair<FactorVector, MedianCi> median_ci(const std::vector<FitResult>& filtered) {
    if (filtered.size() < 2)
        throw std::invalid_argument("median_ci: needs at least two fits");
    const std::size_t n = filtered.size();
    const std::size_t k = filtered.front().x_star.size();
    FactorVector nominal(k);
    MedianCi ci;
    ci.intervals.resize(k);
    ci.sigma.resize(k);
    ci.n_filtered = n;

    std::vector<double> column(n);
    const double z = 1.96 * std::sqrt(3.14159265358979323846 / 2.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) column[j] = filtered[j].x_star[i];
        const double med = detail::median_of(column);
        double mean = 0.0;
        for (double x : column) mean += x;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double x : column) ss += (x - mean) * (x - mean);
        const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
        const double half = z * sigma / std::sqrt(static_cast<double>(n));
        nominal[i] = med;
        ci.sigma[i] = sigma;
        ci.intervals[i] = Interval(med - half, med + half);
    }
    return {std::move(nominal), std::move(ci)};
}

}  // namespace csb

#endif
