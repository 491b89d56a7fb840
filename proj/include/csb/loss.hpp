#ifndef CSB_LOSS_HPP
#define CSB_LOSS_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "csb/core.hpp"
#include "csb/models.hpp"

namespace csb {

struct LossConfig {
    double alpha = 2.0;
};

// Uncertainty threshold: the loss between the nominal output inflated by
// lambda and the nominal output itself. A point is "inside the contour" when
// its dissimilarity does not exceed threshold_value.
struct ThresholdSpec {
    double lambda = 0.0;
    double threshold_value = 0.0;
};

// Mean absolute deviation raised to alpha: (1/|grid|) * sum |y - y_hat|^alpha.
inline double loss(const Trajectory& y, const Trajectory& y_hat, const LossConfig& cfg = {}) {
    if (!(cfg.alpha >= 1.0) || !std::isfinite(cfg.alpha))
        throw std::invalid_argument("loss: alpha must be finite and >= 1");
    if (!(y.grid == y_hat.grid))
        throw std::invalid_argument("loss: trajectories on different grids");
    double acc = 0.0;
    for (std::size_t t = 0; t < y.values.size(); ++t) {
        const double a = y.values[t], b = y_hat.values[t];
        if (!std::isfinite(a) || !std::isfinite(b))
            throw std::invalid_argument("loss: non-finite trajectory value");
        const double d = std::abs(a - b);
        acc += cfg.alpha == 2.0 ? d * d : std::pow(d, cfg.alpha);
    }
    return acc / static_cast<double>(y.values.size());
}

inline ThresholdSpec threshold(const Trajectory& y_hat, double lambda, const LossConfig& cfg = {}) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("threshold: lambda must be positive");
    Trajectory scaled = y_hat;
    for (double& v : scaled.values) v *= lambda;
    return ThresholdSpec{lambda, loss(scaled, y_hat, cfg)};
}

// Shared tally of model evaluations (and how many of them failed to
// integrate). Increments may interleave across workers; totals are exact.
struct EvalCounter {
    std::atomic<std::uint64_t> evals{0};
    std::atomic<std::uint64_t> failures{0};
};

inline Trajectory reference_trajectory(const ModelDefinition& model, const FactorVector& x_hat,
                                       const TimeGrid& grid, const IntegratorConfig& integ = {}) {
    IntegrationResult r = integrate(model, x_hat, grid, integ);
    if (!r.ok())
        throw std::runtime_error("reference_trajectory: integration failed at the nominal point");
    return r.observed;
}

// Scalarized model: maps a factor vector to its dissimilarity against a fixed
// reference trajectory (measured data, or the nominal output for contour
// work). Integration failures come back as +infinity so that sort-and-trim
// consumers push them to the tail.
class DissimilarityObjective {
  public:
    DissimilarityObjective(const ModelDefinition& model, Trajectory reference,
                           LossConfig loss_cfg = {}, IntegratorConfig integ_cfg = {},
                           EvalCounter* counter = nullptr)
        : model_(&model),
          ref_(std::move(reference)),
          loss_(loss_cfg),
          integ_(integ_cfg),
          counter_(counter) {}

    double operator()(const FactorVector& x) const {
        if (counter_) counter_->evals.fetch_add(1, std::memory_order_relaxed);
        IntegrationResult r = integrate(*model_, x, ref_.grid, integ_);
        if (!r.ok()) {
            if (counter_) counter_->failures.fetch_add(1, std::memory_order_relaxed);
            return std::numeric_limits<double>::infinity();
        }
        return loss(r.observed, ref_, loss_);
    }

    const Trajectory& reference() const { return ref_; }
    const ModelDefinition& model() const { return *model_; }
    const LossConfig& loss_config() const { return loss_; }
    const IntegratorConfig& integrator_config() const { return integ_; }
    EvalCounter* counter() const { return counter_; }

  private:
    const ModelDefinition* model_;
    Trajectory ref_;
    LossConfig loss_;
    IntegratorConfig integ_;
    EvalCounter* counter_;
};

inline double dissimilarity(const ModelDefinition& model, const FactorVector& x,
                            const FactorVector& x_hat, const TimeGrid& grid,
                            const LossConfig& loss_cfg = {}, const IntegratorConfig& integ = {},
                            EvalCounter* counter = nullptr) {
    DissimilarityObjective obj(model, reference_trajectory(model, x_hat, grid, integ), loss_cfg,
                               integ, counter);
    return obj(x);
}

}  // namespace csb

#endif
