#ifndef CSB_SENSITIVITY_HPP
#define CSB_SENSITIVITY_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "csb/core.hpp"
#include "csb/loss.hpp"
#include "csb/models.hpp"
#include "csb/rng.hpp"
#include "csb/sampling.hpp"

namespace csb {

// Sample plan for variance-based indices: two base designs plus one
// column-swapped design per factor, n*(k+2) model runs in total.
struct SaltelliDesign {
    DesignMatrix a;
    DesignMatrix b;
    std::vector<DesignMatrix> ab;  // ab[i] = a with column i taken from b
    std::size_t n = 0;
    std::size_t k = 0;
};

// A and B come from a single Latin-hypercube over the doubled factor space
// (2k columns, split in half), so both halves keep the stratification.
inline SaltelliDesign saltelli_design(const Orthotope& box, std::size_t n, std::uint64_t seed) {
    if (n < 16) throw std::invalid_argument("saltelli_design: n must be >= 16");
    const std::size_t k = box.dim();
    std::vector<std::string> doubled_names;
    std::vector<Interval> doubled_ivals;
    doubled_names.reserve(2 * k);
    doubled_ivals.reserve(2 * k);
    for (std::size_t half = 0; half < 2; ++half)
        for (std::size_t i = 0; i < k; ++i) {
            doubled_names.push_back(box.factor_names[i] + (half == 0 ? "#a" : "#b"));
            doubled_ivals.push_back(box.intervals[i]);
        }
    DesignMatrix wide =
        latin_hypercube(Orthotope(std::move(doubled_names), std::move(doubled_ivals)), n, seed);

    SaltelliDesign d;
    d.n = n;
    d.k = k;
    auto half_matrix = [&](std::size_t offset) {
        DesignMatrix m;
        m.factor_names = box.factor_names;
        m.n_rows = n;
        m.n_cols = k;
        m.seed = seed;
        m.data.resize(n * k);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < k; ++c) m.at(r, c) = wide.at(r, offset + c);
        return m;
    };
    d.a = half_matrix(0);
    d.b = half_matrix(k);
    d.ab.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        DesignMatrix m = d.a;
        for (std::size_t r = 0; r < n; ++r) m.at(r, i) = d.b.at(r, i);
        d.ab.push_back(std::move(m));
    }
    return d;
}

enum class SaStatus { ok, degenerate };

struct SensitivityReport {
    std::vector<double> s_first;  // may be negative (estimator property)
    std::vector<double> s_total;
    std::size_t sample_size = 0;
    Orthotope box;
    std::uint64_t eval_count = 0;
    SaStatus status = SaStatus::ok;
};

// First-order and total-order indices from precomputed outputs:
//   S_i  = (1/n) sum f(B) (f(AB_i) - f(A)) / V
//   ST_i = (1/2n) sum (f(A) - f(AB_i))^2 / V
// with V the sample variance over the pooled A and B outputs.
inline SensitivityReport sobol_indices(const std::vector<double>& fa,
                                       const std::vector<double>& fb,
                                       const std::vector<std::vector<double>>& fab) {
    const std::size_t n = fa.size();
    const std::size_t k = fab.size();
    if (n < 2 || fb.size() != n)
        throw std::invalid_argument("sobol_indices: A/B output size mismatch");
    for (const auto& col : fab)
        if (col.size() != n) throw std::invalid_argument("sobol_indices: AB output size mismatch");
    auto check = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x))
                throw std::invalid_argument("sobol_indices: non-finite output");
    };
    check(fa);
    check(fb);
    for (const auto& col : fab) check(col);

    SensitivityReport rep;
    rep.sample_size = n;
    rep.s_first.assign(k, 0.0);
    rep.s_total.assign(k, 0.0);

    double mean = 0.0;
    for (double x : fa) mean += x;
    for (double x : fb) mean += x;
    mean /= static_cast<double>(2 * n);
    double ss = 0.0;
    for (double x : fa) ss += (x - mean) * (x - mean);
    for (double x : fb) ss += (x - mean) * (x - mean);
    const double variance = ss / static_cast<double>(2 * n - 1);
    // a constant surface rarely sums to an exact mean; spreads at the scale of
    // the summation noise are zero variance for any practical purpose
    const double noise = static_cast<double>(2 * n) * std::numeric_limits<double>::epsilon() *
                         (1.0 + std::abs(mean));
    if (variance <= noise * noise) {
        rep.status = SaStatus::degenerate;
        return rep;
    }

    for (std::size_t i = 0; i < k; ++i) {
        double first = 0.0, total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            first += fb[j] * (fab[i][j] - fa[j]);
            const double d = fa[j] - fab[i][j];
            total += d * d;
        }
        rep.s_first[i] = first / static_cast<double>(n) / variance;
        rep.s_total[i] = total / static_cast<double>(2 * n) / variance;
    }
    return rep;
}

// Full analysis of a scalar function of the factors: build the design, run
// all n*(k+2) evaluations, compute the indices.
template <typename F>
SensitivityReport sensitivity_analysis(F&& f, const Orthotope& box, std::size_t n,
                                       std::uint64_t seed, unsigned threads = 1) {
    SaltelliDesign d = saltelli_design(box, n, seed);
    const std::size_t k = d.k;
    std::vector<double> fa(n), fb(n);
    std::vector<std::vector<double>> fab(k, std::vector<double>(n));
    detail::parallel_for(n * (k + 2), threads, [&](std::size_t idx) {
        const std::size_t block = idx / n;
        const std::size_t row = idx % n;
        if (block == 0)
            fa[row] = f(d.a.row(row));
        else if (block == 1)
            fb[row] = f(d.b.row(row));
        else
            fab[block - 2][row] = f(d.ab[block - 2].row(row));
    });
    SensitivityReport rep = sobol_indices(fa, fb, fab);
    rep.box = box;
    rep.eval_count = static_cast<std::uint64_t>(n) * (k + 2);
    return rep;
}

struct ConvergencePoint {
    std::size_t sample_size = 0;
    SensitivityReport report;
    double sum_s_first = 0.0;
    double sum_abs_s_first = 0.0;
    double sum_s_total = 0.0;
};

using ConvergenceSeries = std::vector<ConvergencePoint>;

// Repeat the analysis at increasing sample sizes on the dissimilarity
// surface around the nominal point; the three summary series back the usual
// graphical convergence checks (per-factor ST, total ST, signed vs absolute
// first-order mass).
inline ConvergenceSeries convergence_analysis(const ModelDefinition& model,
                                              const FactorVector& x_hat, const Orthotope& box,
                                              const TimeGrid& grid,
                                              const std::vector<std::size_t>& sizes,
                                              std::uint64_t seed, const LossConfig& loss_cfg = {},
                                              const IntegratorConfig& integ = {},
                                              EvalCounter* counter = nullptr,
                                              unsigned threads = 1) {
    for (std::size_t s = 1; s < sizes.size(); ++s)
        if (!(sizes[s] > sizes[s - 1]))
            throw std::invalid_argument("convergence_analysis: sizes must be increasing");

    DissimilarityObjective phi(model, reference_trajectory(model, x_hat, grid, integ), loss_cfg,
                               integ, counter);
    ConvergenceSeries series;
    series.reserve(sizes.size());
    for (std::size_t n : sizes) {
        ConvergencePoint p;
        p.sample_size = n;
        p.report = sensitivity_analysis(
            phi, box, n, substream_seed(seed, "sa-n-" + std::to_string(n)), threads);
        for (double s : p.report.s_first) {
            p.sum_s_first += s;
            p.sum_abs_s_first += std::abs(s);
        }
        for (double s : p.report.s_total) p.sum_s_total += s;
        series.push_back(std::move(p));
    }
    return series;
}

}  // namespace csb

#endif
