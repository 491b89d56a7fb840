#ifndef CSB_PIPELINE_HPP
#define CSB_PIPELINE_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "csb/config.hpp"
#include "csb/core.hpp"
#include "csb/estimation.hpp"
#include "csb/io.hpp"
#include "csb/loss.hpp"
#include "csb/models.hpp"
#include "csb/oat.hpp"
#include "csb/rng.hpp"
#include "csb/sampling.hpp"
#include "csb/sensitivity.hpp"
#include "csb/shrink.hpp"

namespace csb::pipeline {

namespace fs = std::filesystem;

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_numeric_failure = 3;
inline constexpr int exit_non_convergence = 4;

struct RunOptions {
    std::string out_dir;
    std::optional<std::uint64_t> seed;  // overrides the config's root seed
    unsigned threads = 1;
    std::size_t repeats = 10;  // csb-study only
};

namespace detail {

inline std::string box_json(const Orthotope& box) {
    io::JsonObj j;
    for (std::size_t i = 0; i < box.dim(); ++i)
        j.raw(box.factor_names[i],
              io::JsonArr().add(box.intervals[i].lower).add(box.intervals[i].upper).str());
    return j.str();
}

// factor, raw bounds, and bounds rescaled to the search range ([0,1] maps the
// range itself; values outside it land outside [0,1]).
inline void write_box_csv(const fs::path& path, const Orthotope& box, const Orthotope& ranges) {
    io::CsvWriter w({"factor", "lower", "upper", "normalized_lower", "normalized_upper"});
    for (std::size_t i = 0; i < box.dim(); ++i) {
        const Interval norm = normalize_interval(box.intervals[i], ranges.intervals[i]);
        w.cell(box.factor_names[i])
            .cell(box.intervals[i].lower)
            .cell(box.intervals[i].upper)
            .cell(norm.lower)
            .cell(norm.upper);
    }
    w.save(path.string());
}

inline void write_manifest(const fs::path& dir, const std::string& command,
                           const ProblemConfig& cfg, const EvalCounter& counter,
                           std::size_t repeats = 0) {
    io::JsonObj m;
    m.add("tool", "csb-lab");
    m.add("command", command);
    if (repeats > 0) m.add("repeats", repeats);
    m.add("seed", static_cast<std::size_t>(cfg.seed));
    m.add("config_hash", config_hash(cfg));
    m.add("eval_count", static_cast<std::size_t>(counter.evals.load()));
    m.add("eval_failures", static_cast<std::size_t>(counter.failures.load()));
    m.raw("config", serialize_config(cfg));
    io::write_text_file((dir / "manifest.json").string(), m.str() + "\n");
}

inline io::JsonObj summary_head(const std::string& command, const ProblemConfig& cfg,
                                const EvalCounter& counter) {
    io::JsonObj s;
    s.add("command", command);
    s.add("model", cfg.model);
    s.add("seed", static_cast<std::size_t>(cfg.seed));
    s.add("config_hash", config_hash(cfg));
    s.add("eval_count", static_cast<std::size_t>(counter.evals.load()));
    s.add("eval_failures", static_cast<std::size_t>(counter.failures.load()));
    return s;
}

inline void save_summary(const fs::path& dir, const io::JsonObj& s) {
    io::write_text_file((dir / "summary.json").string(), s.str() + "\n");
}

// Observations for the fit: either a two-column file checked against the grid
// or a simulation of the configured nominal with optional multiplicative
// noise. Either way the series actually used is dumped to data.csv.
inline Trajectory acquire_data(const ProblemConfig& cfg, const ModelDefinition& model,
                               const TimeGrid& g, const fs::path& dir) {
    std::vector<double> values;
    if (cfg.data.kind == DataSpec::Kind::none) {
        throw ConfigError("this command needs a 'data' block ('file' or 'synthetic')");
    } else if (cfg.data.kind == DataSpec::Kind::file) {
        auto [times, vals] = io::read_time_series_csv(cfg.data.file);
        if (times.size() != g.size())
            throw ConfigError("data file '" + cfg.data.file + "' has " +
                              std::to_string(times.size()) + " rows, grid has " +
                              std::to_string(g.size()));
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double tol = 1e-9 * std::max(1.0, std::abs(g.points[i]));
            if (std::abs(times[i] - g.points[i]) > tol)
                throw ConfigError("data file '" + cfg.data.file + "' row " +
                                  std::to_string(i + 1) + ": time " + fmt17(times[i]) +
                                  " does not match grid point " + fmt17(g.points[i]));
        }
        values = std::move(vals);
    } else {
        const FactorVector x_hat = nominal_vector(cfg);
        Trajectory clean = reference_trajectory(model, x_hat, g, cfg.integrator);
        values = clean.values;
        if (cfg.data.noise > 0.0) {
            RngStream rng(*cfg.data.seed);
            for (double& v : values) v *= 1.0 + cfg.data.noise * rng.normal();
        }
    }
    io::CsvWriter w({"time", "cases"});
    for (std::size_t i = 0; i < g.size(); ++i) w.cell(g.points[i]).cell(values[i]);
    w.save((dir / "data.csv").string());
    return Trajectory(g, std::move(values));
}

inline FactorVector checked_nominal(const ProblemConfig& cfg, const Orthotope& ranges) {
    FactorVector x_hat = nominal_vector(cfg);
    for (std::size_t i = 0; i < ranges.dim(); ++i)
        if (!ranges.intervals[i].contains(x_hat[i]))
            throw ConfigError("factor '" + ranges.factor_names[i] + "': nominal " + fmt17(x_hat[i]) +
                              " outside the search box");
    return x_hat;
}

inline std::string bound_diag_json(const OatBoundDiag& b) {
    io::JsonObj j;
    j.add("value", b.value);
    j.add("dissimilarity", b.phi);
    j.add("resolved", b.resolved);
    j.add("rungs", b.ladder_steps);
    j.add("bisect_steps", b.bisect_steps);
    j.add("evals", b.ladder_steps + b.bisect_steps);
    return j.str();
}

inline void write_oat_artifacts(const fs::path& dir, const ProblemConfig& cfg,
                                const OatResult& res, const Orthotope& ranges) {
    write_box_csv(dir / "promissory.csv", res.box, ranges);
    io::JsonObj d;
    d.add("lambda", cfg.lambda);
    d.add("threshold", res.threshold.threshold_value);
    io::JsonObj facs;
    for (std::size_t i = 0; i < res.factors.size(); ++i) {
        io::JsonObj fj;
        fj.raw("away", bound_diag_json(res.factors[i].away));
        fj.raw("toward", bound_diag_json(res.factors[i].toward));
        fj.add("additive_fallback", res.factors[i].additive_fallback);
        facs.raw(ranges.factor_names[i], fj.str());
    }
    d.raw("factors", facs.str());
    io::write_text_file((dir / "oat_diag.json").string(), d.str() + "\n");
}

inline bool oat_fully_resolved(const OatResult& res) {
    for (const auto& f : res.factors)
        if (!f.away.resolved || !f.toward.resolved) return false;
    return true;
}

inline void write_trace_jsonl(const fs::path& dir, const ShrinkTrace& trace,
                              const Orthotope& /*ranges*/) {
    std::string out;
    for (const auto& rec : trace.iterations) {
        io::JsonObj j;
        j.add("iteration", rec.iteration);
        j.add("fraction_below", rec.fraction_below);
        j.add("psi", rec.psi);
        j.add("bins_used", rec.bins_used);
        j.add("stalled", rec.stalled);
        io::JsonArr prot;
        for (std::size_t i : rec.protected_factors) prot.add(rec.box.factor_names[i]);
        j.raw("protected", prot.str());
        io::JsonArr retry;
        for (std::size_t i : rec.shift_retry_factors) retry.add(rec.box.factor_names[i]);
        j.raw("shift_retry", retry.str());
        j.raw("box", box_json(rec.box));
        out += j.str();
        out += '\n';
    }
    io::write_text_file((dir / "trace.jsonl").string(), out);
}

inline void write_samples_csv(const fs::path& dir, const McResult& mc) {
    std::vector<std::string> header = mc.matrix.factor_names;
    header.push_back("dissimilarity");
    io::CsvWriter w(header);
    for (std::size_t i = 0; i < mc.outputs.size(); ++i) {
        for (std::size_t j = 0; j < mc.matrix.n_cols; ++j) w.cell(mc.matrix.at(i, j));
        w.cell(mc.outputs[i]);
    }
    w.save((dir / "samples.csv").string());
}

}  // namespace detail

inline int run_fit(const ProblemConfig& cfg, const fs::path& dir, unsigned threads) {
    EvalCounter counter;
    const ModelDefinition model = make_model(cfg);
    const TimeGrid g = grid(cfg);
    const Orthotope ranges = search_box(cfg);
    const Trajectory data = detail::acquire_data(cfg, model, g, dir);

    FitOptions fopt;
    fopt.tol = cfg.fit.tol;
    fopt.max_evals = cfg.fit.max_evals;
    fopt.integrator = cfg.integrator;
    fopt.threads = threads;
    const std::vector<FitResult> fits =
        multi_start_fit(model, data, ranges, cfg.fit.n_starts, *cfg.fit.seed, cfg.loss, fopt,
                        &counter);

    std::vector<std::string> header{"start"};
    for (const auto& f : cfg.factors) header.push_back("start_" + f.name);
    for (const auto& f : cfg.factors) header.push_back("x_" + f.name);
    header.insert(header.end(), {"loss", "evals", "converged"});
    io::CsvWriter w(std::move(header));
    for (std::size_t i = 0; i < fits.size(); ++i) {
        w.cell(i);
        for (double v : fits[i].start_point) w.cell(v);
        for (double v : fits[i].x_star) w.cell(v);
        w.cell(fits[i].final_loss);
        w.cell(static_cast<std::size_t>(fits[i].eval_count));
        w.cell(fits[i].converged);
    }
    w.save((dir / "fits.csv").string());

    if (fits.empty()) {
        io::JsonObj s = detail::summary_head("fit", cfg, counter);
        s.add("error", "every start failed to integrate; no fit produced");
        detail::save_summary(dir, s);
        detail::write_manifest(dir, "fit", cfg, counter);
        std::cerr << "csb-lab: every start failed to integrate\n";
        return exit_numeric_failure;
    }

    const std::vector<FitResult> kept = filter_fits(fits, cfg.fit.filter);
    double min_loss = kept.front().final_loss;
    for (const auto& f : kept) min_loss = std::min(min_loss, f.final_loss);

    FactorVector nominal;
    std::size_t n_filtered = kept.size();
    if (kept.size() >= 2) {
        auto [med, ci] = median_ci(kept);
        nominal = med;
        io::CsvWriter mw({"factor", "median", "sigma", "lower", "upper"});
        for (std::size_t i = 0; i < cfg.factors.size(); ++i)
            mw.cell(cfg.factors[i].name)
                .cell(med[i])
                .cell(ci.sigma[i])
                .cell(ci.intervals[i].lower)
                .cell(ci.intervals[i].upper);
        mw.save((dir / "median_ci.csv").string());
    } else {
        nominal = kept.front().x_star;  // a lone fit has no spread to summarize
    }

    io::JsonObj nj;
    io::JsonObj facs;
    for (std::size_t i = 0; i < cfg.factors.size(); ++i)
        facs.add(cfg.factors[i].name, nominal[i]);
    nj.raw("factors", facs.str());
    nj.add("n_filtered", n_filtered);
    nj.add("min_loss", min_loss);
    io::write_text_file((dir / "nominal.json").string(), nj.str() + "\n");

    std::size_t n_converged = 0;
    for (const auto& f : fits) n_converged += f.converged ? 1 : 0;
    io::JsonObj s = detail::summary_head("fit", cfg, counter);
    s.add("n_starts", fits.size());
    s.add("n_converged", n_converged);
    s.add("n_filtered", n_filtered);
    s.add("min_loss", min_loss);
    s.add("median_ci_written", kept.size() >= 2);
    detail::save_summary(dir, s);
    detail::write_manifest(dir, "fit", cfg, counter);
    return exit_ok;
}

inline int run_oat(const ProblemConfig& cfg, const fs::path& dir, unsigned /*threads*/) {
    EvalCounter counter;
    const ModelDefinition model = make_model(cfg);
    const TimeGrid g = grid(cfg);
    const Orthotope ranges = search_box(cfg);
    const FactorVector x_hat = detail::checked_nominal(cfg, ranges);

    const OatResult res =
        promissory_box(model, x_hat, g, cfg.oat, cfg.loss, cfg.integrator, &counter, &ranges);
    detail::write_oat_artifacts(dir, cfg, res, ranges);

    const bool resolved = detail::oat_fully_resolved(res);
    io::JsonObj s = detail::summary_head("oat", cfg, counter);
    s.add("threshold", res.threshold.threshold_value);
    s.add("fully_resolved", resolved);
    detail::save_summary(dir, s);
    detail::write_manifest(dir, "oat", cfg, counter);
    return resolved ? exit_ok : exit_non_convergence;
}

inline int run_csb(const ProblemConfig& cfg, const fs::path& dir, unsigned threads) {
    EvalCounter counter;
    const ModelDefinition model = make_model(cfg);
    const TimeGrid g = grid(cfg);
    const Orthotope ranges = search_box(cfg);
    const FactorVector x_hat = detail::checked_nominal(cfg, ranges);

    const OatResult oat =
        promissory_box(model, x_hat, g, cfg.oat, cfg.loss, cfg.integrator, &counter, &ranges);
    detail::write_oat_artifacts(dir, cfg, oat, ranges);
    const std::uint64_t oat_evals = counter.evals.load();

    const CsbResult res =
        csb_estimate(model, x_hat, oat.box, g, cfg.shrink, cfg.loss, cfg.integrator, &counter,
                     threads);
    detail::write_box_csv(dir / "csb.csv", res.box, ranges);
    detail::write_trace_jsonl(dir, res.trace, ranges);

    // Fresh-seed Monte Carlo on the final box: an independent check that the
    // reported fraction was not an artifact of the loop's own sampling.
    const std::uint64_t cert_seed = substream_seed(cfg.seed, "certificate");
    DissimilarityObjective phi(model, reference_trajectory(model, x_hat, g, cfg.integrator),
                               cfg.loss, cfg.integrator, &counter);
    const McResult cert = monte_carlo(phi, res.box, cfg.shrink.n, cert_seed, threads);
    std::size_t below = 0;
    for (double y : cert.outputs)
        if (y <= res.trace.threshold.threshold_value) ++below;
    const double cert_fraction =
        static_cast<double>(below) / static_cast<double>(cert.outputs.size());
    io::JsonObj cj;
    cj.add("n", cert.outputs.size());
    cj.add("seed", static_cast<std::size_t>(cert_seed));
    cj.add("threshold", res.trace.threshold.threshold_value);
    cj.add("fraction_below", cert_fraction);
    io::write_text_file((dir / "ua_certificate.json").string(), cj.str() + "\n");

    const bool converged = res.trace.termination == ShrinkTermination::converged;
    io::JsonObj s = detail::summary_head("csb", cfg, counter);
    s.add("threshold", res.trace.threshold.threshold_value);
    s.add("iterations", res.trace.iterations.size());
    s.add("converged", converged);
    s.add("final_fraction_below", res.trace.iterations.empty()
                                      ? 0.0
                                      : res.trace.iterations.back().fraction_below);
    s.add("certificate_fraction", cert_fraction);
    s.add("oat_evals", static_cast<std::size_t>(oat_evals));
    s.add("shrink_evals", static_cast<std::size_t>(res.trace.eval_count));
    s.add("oat_fully_resolved", detail::oat_fully_resolved(oat));
    detail::save_summary(dir, s);
    detail::write_manifest(dir, "csb", cfg, counter);
    return converged ? exit_ok : exit_non_convergence;
}

inline int run_ua(const ProblemConfig& cfg, const fs::path& dir, unsigned threads) {
    EvalCounter counter;
    const ModelDefinition model = make_model(cfg);
    const TimeGrid g = grid(cfg);
    const Orthotope ranges = search_box(cfg);
    const FactorVector x_hat = detail::checked_nominal(cfg, ranges);
    const Orthotope box = box_for(cfg.ua.box, cfg);

    DissimilarityObjective phi(model, reference_trajectory(model, x_hat, g, cfg.integrator),
                               cfg.loss, cfg.integrator, &counter);
    const ThresholdSpec thr = threshold(phi.reference(), cfg.lambda, cfg.loss);
    const McResult mc = monte_carlo(phi, box, cfg.ua.n, *cfg.ua.seed, threads);
    const UaSummary ua = uncertainty_analysis(phi, mc, thr, cfg.ua.envelope, threads);

    detail::write_samples_csv(dir, mc);
    if (cfg.ua.envelope) {
        io::CsvWriter w({"time", "min", "q05", "median", "q95", "max"});
        for (std::size_t t = 0; t < g.size(); ++t) {
            w.cell(g.points[t]);
            for (double v : ua.envelope[t]) w.cell(v);
        }
        w.save((dir / "ua_envelope.csv").string());
    }

    io::JsonObj s = detail::summary_head("ua", cfg, counter);
    s.add("n", ua.n);
    s.add("threshold", ua.threshold_value);
    s.add("fraction_below", ua.fraction_below);
    s.add("exceed_count", ua.exceed_rows.size());
    s.add("envelope_written", cfg.ua.envelope);
    s.raw("box", detail::box_json(box));
    detail::save_summary(dir, s);
    detail::write_manifest(dir, "ua", cfg, counter);
    return exit_ok;
}

inline int run_sa(const ProblemConfig& cfg, const fs::path& dir, unsigned threads) {
    EvalCounter counter;
    const ModelDefinition model = make_model(cfg);
    const TimeGrid g = grid(cfg);
    const Orthotope ranges = search_box(cfg);
    const FactorVector x_hat = detail::checked_nominal(cfg, ranges);
    const Orthotope box = box_for(cfg.sa.box, cfg);

    DissimilarityObjective phi(model, reference_trajectory(model, x_hat, g, cfg.integrator),
                               cfg.loss, cfg.integrator, &counter);
    const SensitivityReport rep = sensitivity_analysis(phi, box, cfg.sa.n, *cfg.sa.seed, threads);

    io::CsvWriter w({"factor", "s_first", "s_total"});
    for (std::size_t i = 0; i < cfg.factors.size(); ++i)
        w.cell(cfg.factors[i].name).cell(rep.s_first[i]).cell(rep.s_total[i]);
    w.save((dir / "sa.csv").string());

    double sum_s = 0.0, sum_st = 0.0;
    for (double v : rep.s_first) sum_s += v;
    for (double v : rep.s_total) sum_st += v;
    io::JsonObj s = detail::summary_head("sa", cfg, counter);
    s.add("n", rep.sample_size);
    s.add("degenerate", rep.status == SaStatus::degenerate);
    s.add("sum_s_first", sum_s);
    s.add("sum_s_total", sum_st);
    s.raw("box", detail::box_json(box));
    detail::save_summary(dir, s);
    detail::write_manifest(dir, "sa", cfg, counter);
    return exit_ok;
}

inline int run_converge(const ProblemConfig& cfg, const fs::path& dir, unsigned threads) {
    EvalCounter counter;
    const ModelDefinition model = make_model(cfg);
    const TimeGrid g = grid(cfg);
    const Orthotope ranges = search_box(cfg);
    const FactorVector x_hat = detail::checked_nominal(cfg, ranges);
    const Orthotope box = box_for(cfg.sa.box, cfg);

    const ConvergenceSeries series =
        convergence_analysis(model, x_hat, box, g, cfg.converge.sizes, *cfg.sa.seed, cfg.loss,
                             cfg.integrator, &counter, threads);

    std::vector<std::string> header{"size"};
    for (const auto& f : cfg.factors) header.push_back("s_" + f.name);
    for (const auto& f : cfg.factors) header.push_back("st_" + f.name);
    header.insert(header.end(), {"sum_s", "sum_abs_s", "sum_st"});
    io::CsvWriter w(std::move(header));
    for (const auto& pt : series) {
        w.cell(pt.sample_size);
        for (double v : pt.report.s_first) w.cell(v);
        for (double v : pt.report.s_total) w.cell(v);
        w.cell(pt.sum_s_first).cell(pt.sum_abs_s_first).cell(pt.sum_s_total);
    }
    w.save((dir / "converge.csv").string());

    io::JsonObj s = detail::summary_head("converge", cfg, counter);
    io::JsonArr sizes;
    for (const auto& pt : series) sizes.add(pt.sample_size);
    s.raw("sizes", sizes.str());
    s.raw("box", detail::box_json(box));
    detail::save_summary(dir, s);
    detail::write_manifest(dir, "converge", cfg, counter);
    return exit_ok;
}

inline int run_csb_study(const ProblemConfig& cfg, const fs::path& dir, unsigned threads,
                         std::size_t repeats) {
    if (repeats < 2) throw ConfigError("csb-study needs repeats >= 2");
    EvalCounter counter;
    const ModelDefinition model = make_model(cfg);
    const TimeGrid g = grid(cfg);
    const Orthotope ranges = search_box(cfg);
    const FactorVector x_hat = detail::checked_nominal(cfg, ranges);

    const OatResult oat =
        promissory_box(model, x_hat, g, cfg.oat, cfg.loss, cfg.integrator, &counter, &ranges);
    detail::write_oat_artifacts(dir, cfg, oat, ranges);
    const std::uint64_t oat_evals = counter.evals.load();

    const std::size_t k = ranges.dim();
    std::vector<std::vector<double>> lower_norm(k), upper_norm(k);
    io::CsvWriter bw({"rep", "evals", "iterations", "converged", "final_fraction_below"});
    std::size_t n_converged = 0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        ShrinkConfig sc = cfg.shrink;
        sc.seed = substream_seed(cfg.seed, "study-rep-" + std::to_string(rep));
        const CsbResult res =
            csb_estimate(model, x_hat, oat.box, g, sc, cfg.loss, cfg.integrator, &counter,
                         threads);
        for (std::size_t i = 0; i < k; ++i) {
            const Interval norm = normalize_interval(res.box.intervals[i], ranges.intervals[i]);
            lower_norm[i].push_back(norm.lower);
            upper_norm[i].push_back(norm.upper);
        }
        const bool conv = res.trace.termination == ShrinkTermination::converged;
        n_converged += conv ? 1 : 0;
        bw.cell(rep)
            .cell(static_cast<std::size_t>(res.trace.eval_count))
            .cell(res.trace.iterations.size())
            .cell(conv)
            .cell(res.trace.iterations.empty() ? 0.0
                                               : res.trace.iterations.back().fraction_below);
    }
    bw.save((dir / "budgets.csv").string());

    io::CsvWriter sw({"factor", "bound", "min", "q1", "median", "q3", "max"});
    auto emit = [&](const std::string& name, const char* bound, std::vector<double>& vals) {
        std::sort(vals.begin(), vals.end());
        sw.cell(name)
            .cell(std::string(bound))
            .cell(csb::detail::quantile_sorted(vals, 0.0))
            .cell(csb::detail::quantile_sorted(vals, 0.25))
            .cell(csb::detail::quantile_sorted(vals, 0.5))
            .cell(csb::detail::quantile_sorted(vals, 0.75))
            .cell(csb::detail::quantile_sorted(vals, 1.0));
    };
    for (std::size_t i = 0; i < k; ++i) {
        emit(ranges.factor_names[i], "lower", lower_norm[i]);
        emit(ranges.factor_names[i], "upper", upper_norm[i]);
    }
    sw.save((dir / "study.csv").string());

    io::JsonObj s = detail::summary_head("csb-study", cfg, counter);
    s.add("repeats", repeats);
    s.add("n_converged", n_converged);
    s.add("oat_evals", static_cast<std::size_t>(oat_evals));
    detail::save_summary(dir, s);
    detail::write_manifest(dir, "csb-study", cfg, counter, repeats);
    return n_converged == repeats ? exit_ok : exit_non_convergence;
}

// Dispatch a named command: creates the output directory, takes the lock,
// maps exceptions to exit codes. Config errors print to stderr and leave no
// artifacts; numeric failures leave whatever was written plus the message.
inline int run_command(const std::string& command, ProblemConfig cfg, const RunOptions& opt) {
    if (opt.seed) cfg.seed = *opt.seed;
    resolve_seeds(cfg);

    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (ec) {
        std::cerr << "csb-lab: cannot create output directory '" << opt.out_dir
                  << "': " << ec.message() << "\n";
        return exit_config_error;
    }
    std::optional<io::DirLock> lock;
    try {
        lock.emplace(opt.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "csb-lab: " << e.what() << "\n";
        return exit_config_error;
    }

    const fs::path dir(opt.out_dir);
    try {
        if (command == "fit") return run_fit(cfg, dir, opt.threads);
        if (command == "oat") return run_oat(cfg, dir, opt.threads);
        if (command == "csb") return run_csb(cfg, dir, opt.threads);
        if (command == "ua") return run_ua(cfg, dir, opt.threads);
        if (command == "sa") return run_sa(cfg, dir, opt.threads);
        if (command == "converge") return run_converge(cfg, dir, opt.threads);
        if (command == "csb-study") return run_csb_study(cfg, dir, opt.threads, opt.repeats);
        throw ConfigError("unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        std::cerr << "csb-lab: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "csb-lab: " << e.what() << "\n";
        io::JsonObj s;
        s.add("command", command);
        s.add("error", std::string(e.what()));
        detail::save_summary(dir, s);
        return exit_numeric_failure;
    }
}

}  // namespace csb::pipeline

#endif
