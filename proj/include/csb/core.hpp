#ifndef CSB_CORE_HPP
#define CSB_CORE_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace csb {

// Vector of input factors (parameters and initial conditions), one value per
// factor in declaration order. Column i of every design matrix refers to the
// same factor as values[i].
using FactorVector = std::vector<double>;

// Closed interval [lower, upper] for a single factor.
struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    Interval() = default;
    Interval(double lo, double hi) : lower(lo), upper(hi) {
        if (!(std::isfinite(lo) && std::isfinite(hi)))
            throw std::invalid_argument("Interval: bounds must be finite");
        if (lo > hi)
            throw std::invalid_argument("Interval: lower > upper");
    }

    double width() const { return upper - lower; }
    double midpoint() const { return 0.5 * (lower + upper); }
    bool contains(double x) const { return lower <= x && x <= upper; }

    bool operator==(const Interval& o) const {
        return lower == o.lower && upper == o.upper;
    }
};

// k-orthotope: per-factor intervals plus the factor names they belong to.
struct Orthotope {
    std::vector<std::string> factor_names;
    std::vector<Interval> intervals;

    Orthotope() = default;
    Orthotope(std::vector<std::string> names, std::vector<Interval> ivals)
        : factor_names(std::move(names)), intervals(std::move(ivals)) {
        if (factor_names.size() != intervals.size())
            throw std::invalid_argument("Orthotope: names/intervals size mismatch");
        if (intervals.empty())
            throw std::invalid_argument("Orthotope: needs at least one factor");
        for (std::size_t i = 0; i < factor_names.size(); ++i)
            for (std::size_t j = i + 1; j < factor_names.size(); ++j)
                if (factor_names[i] == factor_names[j])
                    throw std::invalid_argument("Orthotope: duplicate factor name '" +
                                                factor_names[i] + "'");
    }

    std::size_t dim() const { return intervals.size(); }

    FactorVector midpoint() const {
        FactorVector m(dim());
        for (std::size_t i = 0; i < dim(); ++i) m[i] = intervals[i].midpoint();
        return m;
    }

    bool operator==(const Orthotope& o) const {
        return factor_names == o.factor_names && intervals == o.intervals;
    }
};

// Strictly increasing time grid on which trajectories are sampled.
struct TimeGrid {
    std::vector<double> points;

    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> pts) : points(std::move(pts)) {
        if (points.size() < 2)
            throw std::invalid_argument("TimeGrid: needs at least two points");
        for (std::size_t i = 1; i < points.size(); ++i)
            if (!(points[i] > points[i - 1]))
                throw std::invalid_argument("TimeGrid: points must be strictly increasing");
    }

    static TimeGrid regular(double start, double stop, double step) {
        if (!(step > 0.0) || !(stop > start))
            throw std::invalid_argument("TimeGrid::regular: bad range");
        std::vector<double> pts;
        // build by index so accumulated rounding cannot drop the last point
        const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 0.5));
        pts.reserve(n + 1);
        for (std::size_t i = 0; i <= n; ++i) pts.push_back(start + static_cast<double>(i) * step);
        return TimeGrid(std::move(pts));
    }

    std::size_t size() const { return points.size(); }
    bool operator==(const TimeGrid& o) const { return points == o.points; }
};

// Model output sampled on a time grid.
struct Trajectory {
    TimeGrid grid;
    std::vector<double> values;

    Trajectory() = default;
    Trajectory(TimeGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (values.size() != grid.size())
            throw std::invalid_argument("Trajectory: values/grid size mismatch");
        for (double x : values)
            if (!std::isfinite(x))
                throw std::invalid_argument("Trajectory: non-finite value");
    }
};

inline bool contains(const Orthotope& box, const FactorVector& x) {
    if (box.dim() != x.size())
        throw std::invalid_argument("contains: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!box.intervals[i].contains(x[i])) return false;
    return true;
}

// Maps `target` into the unit coordinates of `reference`, so interval lengths
// from different factors become comparable.
inline Interval normalize_interval(const Interval& target, const Interval& reference) {
    const double w = reference.width();
    if (!(w > 0.0))
        throw std::invalid_argument("normalize_interval: zero-width reference");
    Interval out;
    out.lower = (target.lower - reference.lower) / w;
    out.upper = (target.upper - reference.lower) / w;
    return out;
}

}  // namespace csb

#endif
