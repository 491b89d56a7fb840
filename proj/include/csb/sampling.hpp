#ifndef CSB_SAMPLING_HPP
#define CSB_SAMPLING_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "csb/core.hpp"
#include "csb/loss.hpp"
#include "csb/models.hpp"
#include "csb/rng.hpp"

namespace csb {

// Row-major N x k sample matrix. Column order follows the factor order of the
// box that generated it.
struct DesignMatrix {
    std::vector<std::string> factor_names;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> data;
    std::uint64_t seed = 0;

    double at(std::size_t i, std::size_t j) const { return data[i * n_cols + j]; }
    double& at(std::size_t i, std::size_t j) { return data[i * n_cols + j]; }

    FactorVector row(std::size_t i) const {
        return FactorVector(data.begin() + static_cast<std::ptrdiff_t>(i * n_cols),
                            data.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_cols));
    }
};

// Latin-hypercube design: each factor interval is divided into n equal
// strata and every stratum contributes exactly one sample, with strata paired
// across factors by random permutation. The in-stratum offset is strictly
// inside (0,1), so no sample ever sits on a stratum boundary.
inline DesignMatrix latin_hypercube(const Orthotope& box, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("latin_hypercube: n must be >= 1");
    const std::size_t k = box.dim();
    DesignMatrix m;
    m.factor_names = box.factor_names;
    m.n_rows = n;
    m.n_cols = k;
    m.seed = seed;
    m.data.resize(n * k);

    RngStream rng(seed);
    std::vector<std::size_t> strata(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < k; ++j) {
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        rng.shuffle(strata);
        const Interval& iv = box.intervals[j];
        const double w = iv.width();
        for (std::size_t i = 0; i < n; ++i) {
            const double u = rng.uniform01();
            const double s = (static_cast<double>(strata[i]) + u) * inv_n;
            m.at(i, j) = iv.lower + s * w;
        }
    }
    return m;
}

struct McOptions {
    IntegratorConfig integrator{};
    EvalCounter* counter = nullptr;
    unsigned threads = 1;
};

struct McResult {
    std::vector<double> outputs;  // ascending; +infinity rows (failed runs) at the tail
    DesignMatrix matrix;          // rows permuted to match outputs
    std::uint64_t eval_count = 0;
};

namespace detail {

// Evaluates fn(i) for i in [0, n) on `threads` workers, writing into slot i of
// the result, so the outcome never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const unsigned spawn = static_cast<unsigned>(
        std::min<std::size_t>(threads, n));
    pool.reserve(spawn - 1);
    for (unsigned t = 1; t < spawn; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Evaluate the objective on a fresh LHS design and return outputs sorted
// ascending with the design rows carried along. Ties keep sampling order.
inline McResult monte_carlo(const DissimilarityObjective& phi, const Orthotope& box,
                            std::size_t n, std::uint64_t seed, unsigned threads = 1) {
    McResult r;
    r.matrix = latin_hypercube(box, n, seed);
    r.outputs.resize(n);
    detail::parallel_for(n, threads,
                         [&](std::size_t i) { r.outputs[i] = phi(r.matrix.row(i)); });
    r.eval_count = n;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return r.outputs[a] < r.outputs[b]; });

    std::vector<double> sorted_out(n);
    std::vector<double> sorted_data(r.matrix.data.size());
    const std::size_t k = r.matrix.n_cols;
    for (std::size_t i = 0; i < n; ++i) {
        sorted_out[i] = r.outputs[order[i]];
        std::copy_n(r.matrix.data.begin() + static_cast<std::ptrdiff_t>(order[i] * k), k,
                    sorted_data.begin() + static_cast<std::ptrdiff_t>(i * k));
    }
    r.outputs = std::move(sorted_out);
    r.matrix.data = std::move(sorted_data);
    return r;
}

inline McResult monte_carlo(const ModelDefinition& model, const FactorVector& x_hat,
                            const Orthotope& box, const TimeGrid& grid, std::size_t n,
                            std::uint64_t seed, const LossConfig& loss_cfg = {},
                            const McOptions& opts = {}) {
    DissimilarityObjective phi(model, reference_trajectory(model, x_hat, grid, opts.integrator),
                               loss_cfg, opts.integrator, opts.counter);
    return monte_carlo(phi, box, n, seed, opts.threads);
}

struct UaSummary {
    double fraction_below = 0.0;
    std::vector<std::size_t> exceed_rows;  // indices into the sorted matrix/outputs
    // one row per grid point: {min, q05, median, q95, max} over sample trajectories
    std::vector<std::array<double, 5>> envelope;
    double threshold_value = 0.0;
    std::size_t n = 0;
};

namespace detail {

// Linear-interpolation quantile on a sorted vector (the usual h=(n-1)p rule).
inline double quantile_sorted(const std::vector<double>& s, double p) {
    if (s.empty()) throw std::invalid_argument("quantile: empty sample");
    if (s.size() == 1) return s[0];
    const double h = static_cast<double>(s.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= s.size()) return s.back();
    const double frac = h - static_cast<double>(lo);
    return s[lo] + frac * (s[lo + 1] - s[lo]);
}

}  // namespace detail

// Fraction of sampled outputs inside the contour plus a pointwise trajectory
// envelope. The envelope re-simulates every successful row (those runs are
// counted against the evaluation tally like any other).
inline UaSummary uncertainty_analysis(const DissimilarityObjective& phi, const McResult& mc,
                                      const ThresholdSpec& thr, bool with_envelope = true,
                                      unsigned threads = 1) {
    UaSummary s;
    s.threshold_value = thr.threshold_value;
    s.n = mc.outputs.size();
    std::size_t below = 0;
    for (std::size_t i = 0; i < mc.outputs.size(); ++i) {
        if (mc.outputs[i] <= thr.threshold_value)
            ++below;
        else
            s.exceed_rows.push_back(i);
    }
    s.fraction_below =
        s.n == 0 ? 0.0 : static_cast<double>(below) / static_cast<double>(s.n);

    if (!with_envelope || s.n == 0) return s;

    const TimeGrid& grid = phi.reference().grid;
    std::vector<std::vector<double>> trajs(s.n);
    detail::parallel_for(s.n, threads, [&](std::size_t i) {
        if (phi.counter()) phi.counter()->evals.fetch_add(1, std::memory_order_relaxed);
        IntegrationResult r =
            integrate(phi.model(), mc.matrix.row(i), grid, phi.integrator_config());
        if (r.ok())
            trajs[i] = std::move(r.observed.values);
        else if (phi.counter())
            phi.counter()->failures.fetch_add(1, std::memory_order_relaxed);
    });

    s.envelope.resize(grid.size());
    std::vector<double> column;
    column.reserve(s.n);
    for (std::size_t t = 0; t < grid.size(); ++t) {
        column.clear();
        for (std::size_t i = 0; i < s.n; ++i)
            if (!trajs[i].empty()) column.push_back(trajs[i][t]);
        if (column.empty()) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            s.envelope[t] = {nan, nan, nan, nan, nan};
            continue;
        }
        std::sort(column.begin(), column.end());
        s.envelope[t] = {column.front(), detail::quantile_sorted(column, 0.05),
                         detail::quantile_sorted(column, 0.50),
                         detail::quantile_sorted(column, 0.95), column.back()};
    }
    return s;
}

}  // namespace csb

#endif
