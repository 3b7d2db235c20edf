#pragma once

// Scripted, seeded studies producing ExperimentReport tables: normal
// approximation error of the exact cuts, slice-volume deviation of the normal
// cuts, discrepancy comparison tables, rescoring of published point sets and
// kernel density summaries of cut positions.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "discrepancy.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "optimize.hpp"
#include "report.hpp"

namespace diagslice {

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

} // namespace detail

/// |V_d^-(r_i) - Phi(2 sqrt(3d) (r_i/d - 1/2))| at the exact equivolume cuts.
inline ExperimentReport convergence_experiment(const std::vector<int>& dims, int n) {
    if (n < 2) throw domain_error("convergence_experiment: N must be >= 2");
    if (dims.empty()) throw domain_error("convergence_experiment: no dimensions given");
    detail::Stopwatch clock;

    ExperimentReport rep;
    rep.id = "convergence";
    rep.parameters["dims"] = dims;
    rep.parameters["N"] = n;
    rep.records.columns = {"d", "N", "i", "r", "volume_below", "normal_cdf", "error"};
    Table summary{{"d", "N", "sup_error", "mean_error", "argmax_i", "berry_esseen_bound"}, {}};

    for (int d : dims) {
        const auto part = generating_set(d, n);
        const double scale = 2.0 * std::sqrt(3.0 * d);
        double sup = 0.0;
        std::size_t arg = 1;
        compensated_sum total;
        for (std::size_t i = 1; i <= part.cuts().size(); ++i) {
            const double r = part.cuts()[i - 1];
            const double below = volume_neg(d, r);
            const double phi = normal_cdf(scale * (r / d - 0.5));
            const double err = std::fabs(below - phi);
            total += err;
            if (err > sup) {
                sup = err;
                arg = i;
            }
            rep.records.add_row({std::int64_t{d}, std::int64_t{n}, detail::as_int(i), r, below, phi, err});
        }
        summary.add_row({std::int64_t{d}, std::int64_t{n}, sup, total.value() / (n - 1),
                         detail::as_int(arg), berry_esseen_bound(d)});
    }
    rep.extras.emplace_back("summary", std::move(summary));
    rep.wall_clock_seconds = clock.seconds();
    return rep;
}

/// Index range [first, last] of slices away from the two corner segments:
/// first = max(2, ceil(N/d!)), last = min(N-1, N - ceil(N/d!)). The first and
/// last slices always touch a cube corner and are never counted as interior.
struct InteriorRange {
    std::size_t lower_flag = 0; // ceil(N/d!)
    std::size_t upper_flag = 0; // N - ceil(N/d!)
    std::size_t first = 0;
    std::size_t last = 0;
};

inline InteriorRange interior_range(int d, int n) {
    InteriorRange ir;
    ir.lower_flag = static_cast<std::size_t>(std::ceil(n / factorial(d)));
    ir.upper_flag = static_cast<std::size_t>(n) - ir.lower_flag;
    ir.first = std::max<std::size_t>(2, ir.lower_flag);
    ir.last = std::min<std::size_t>(static_cast<std::size_t>(n) - 1, ir.upper_flag);
    return ir;
}

/// Per-slice volume of the normal-approximation partition against 1/N.
/// Slices are indexed 1..N; slice i lies between cuts r_{i-1} and r_i.
inline ExperimentReport volume_deviation_experiment(int d, const std::vector<int>& ns) {
    if (ns.empty()) throw domain_error("volume_deviation_experiment: no N given");
    detail::Stopwatch clock;

    ExperimentReport rep;
    rep.id = "volume_deviation";
    rep.parameters["d"] = d;
    rep.parameters["Ns"] = ns;
    rep.records.columns = {"d", "N", "i", "volume", "deviation", "relative_deviation", "flagged",
                           "interior"};
    Table summary{{"d", "N", "lower_flag", "upper_flag", "max_rel_dev_interior", "max_rel_dev_all"},
                  {}};

    for (int n : ns) {
        if (n < 2) throw domain_error("volume_deviation_experiment: each N must be >= 2");
        const auto part = normal_approx_set(d, n);
        const auto ir = interior_range(d, n);
        const double target = 1.0 / n;
        double max_interior = 0.0;
        double max_all = 0.0;
        for (std::size_t i = 1; i <= part.strata(); ++i) {
            const double vol = part.stratum_volume(i - 1);
            const double dev = vol - target;
            const double rel = std::fabs(dev) / target;
            const bool flagged = i == ir.lower_flag || i == ir.upper_flag;
            const bool interior = i >= ir.first && i <= ir.last;
            if (interior) max_interior = std::max(max_interior, rel);
            max_all = std::max(max_all, rel);
            rep.records.add_row({std::int64_t{d}, std::int64_t{n}, detail::as_int(i), vol, dev, rel,
                                 std::int64_t{flagged}, std::int64_t{interior}});
        }
        summary.add_row({std::int64_t{d}, std::int64_t{n}, detail::as_int(ir.lower_flag),
                         detail::as_int(ir.upper_flag), max_interior, max_all});
    }
    rep.extras.emplace_back("summary", std::move(summary));
    rep.wall_clock_seconds = clock.seconds();
    return rep;
}

struct ComparisonOptions {
    std::size_t reps = 10000;
    std::vector<Algorithm> optimizers;
    std::size_t budget = 1000;
    std::size_t lowfi_reps = 1500;
    std::size_t runs = 1; // independent optimiser runs per cell, best kept
    std::uint64_t master_seed = 0;
    unsigned threads = default_thread_count();
};

/// 100 * (value - baseline) / baseline.
inline double percent_change(double value, double baseline) {
    return 100.0 * (value - baseline) / baseline;
}

/// Expected squared discrepancy of i.i.d., equivolume and optimised partitions
/// per N, with percentage columns relative to the equivolume baseline.
inline ExperimentReport comparison_table(int d, const std::vector<int>& ns,
                                         const ComparisonOptions& opt) {
    if (opt.reps < 100) throw domain_error("comparison_table: reps must be >= 100");
    if (ns.empty()) throw domain_error("comparison_table: no N given");
    detail::Stopwatch clock;

    ExperimentReport rep;
    rep.id = "comparison";
    rep.parameters["d"] = d;
    rep.parameters["Ns"] = ns;
    rep.parameters["reps"] = opt.reps;
    rep.parameters["budget"] = opt.budget;
    rep.parameters["lowfi_reps"] = opt.lowfi_reps;
    rep.parameters["runs"] = opt.runs;
    std::vector<std::string> algos;
    for (auto a : opt.optimizers) algos.push_back(to_string(a));
    rep.parameters["optimizers"] = algos;
    rep.seeds = {opt.master_seed};

    auto& cols = rep.records.columns;
    cols = {"d", "N", "iid_analytic", "iid_mean", "iid_se", "iid_pct", "equivolume_mean",
            "equivolume_se"};
    for (const auto& a : algos) {
        cols.push_back(a + "_mean");
        cols.push_back(a + "_se");
        cols.push_back(a + "_pct");
    }

    for (int n : ns) {
        const auto cell = derive_seed(opt.master_seed, static_cast<std::uint64_t>(n));
        const auto iid = expected_l2sq(IidSource{d, static_cast<std::size_t>(n)}, opt.reps,
                                       derive_seed(cell, 1), opt.threads);
        const auto equi =
            expected_l2sq(generating_set(d, n), opt.reps, derive_seed(cell, 2), opt.threads);
        std::vector<Cell> row{std::int64_t{d},
                              std::int64_t{n},
                              iid_expected_l2sq_analytic(d, static_cast<std::size_t>(n)),
                              iid.mean_sq,
                              iid.std_err,
                              percent_change(iid.mean_sq, equi.mean_sq),
                              equi.mean_sq,
                              equi.std_err};
        for (std::size_t k = 0; k < opt.optimizers.size(); ++k) {
            OptimizerConfig cfg;
            cfg.d = d;
            cfg.n = n;
            cfg.budget = opt.budget;
            cfg.lowfi_reps = opt.lowfi_reps;
            cfg.hifi_reps = opt.reps;
            cfg.algorithm = opt.optimizers[k];
            cfg.master_seed = derive_seed(cell, 10 + k);
            cfg.threads = opt.threads;
            const auto run = run_best_of(cfg, opt.runs);
            row.emplace_back(run.best_hifi.mean_sq);
            row.emplace_back(run.best_hifi.std_err);
            row.emplace_back(percent_change(run.best_hifi.mean_sq, equi.mean_sq));
        }
        rep.records.add_row(std::move(row));
    }
    rep.wall_clock_seconds = clock.seconds();
    return rep;
}

/// Values of a published table may exceed sqrt(d) by rounding in the last
/// printed digit; such values are clamped to sqrt(d).
inline constexpr double published_rounding = 1e-6;

/// Expected squared discrepancy of the stratified sample for published cut
/// positions. Throws like from_diagonal / sample_stratified for degenerate sets.
inline DiscrepancyEstimate score_paper_pointset(int d, std::vector<double> p, std::size_t reps,
                                                std::uint64_t master_seed,
                                                unsigned threads = default_thread_count()) {
    detail::check_dimension(d, "score_paper_pointset");
    const double top = std::sqrt(static_cast<double>(d));
    for (auto& v : p)
        if (v > top && v <= top + published_rounding) v = top;
    const DiagonalCoords dc(d, std::move(p));
    return expected_l2sq(from_diagonal(dc), reps, master_seed, threads);
}

struct PublishedPointSet {
    std::string table;
    std::string optimizer; // "cma", "es" or "ngopt"
    int d = 0;
    int label = 0; // N as printed in the table
    int n = 0;     // N implied by the number of cuts
    std::vector<double> p;
    double reported = 0.0;
};

inline std::string default_published_data_path() {
#ifdef DIAGSLICE_DATA_DIR
    return std::string(DIAGSLICE_DATA_DIR) + "/published_pointsets.json";
#else
    return "data/published_pointsets.json";
#endif
}

inline std::vector<PublishedPointSet> load_published_pointsets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw domain_error("cannot open point-set data file " + path);
    const auto doc = nlohmann::json::parse(in);
    std::vector<PublishedPointSet> out;
    for (const auto& e : doc.at("pointsets")) {
        PublishedPointSet s;
        s.table = e.at("table").get<std::string>();
        s.optimizer = e.at("optimizer").get<std::string>();
        s.d = e.at("d").get<int>();
        s.label = e.at("label").get<int>();
        s.p = e.at("p").get<std::vector<double>>();
        s.n = static_cast<int>(s.p.size()) + 1;
        s.reported = e.at("reported").get<double>();
        out.push_back(std::move(s));
    }
    return out;
}

/// Rescore published point sets. z = (mean - reported) / (sqrt(2) * se): the
/// published value is taken to carry a standard error of the same size as
/// ours. Degenerate sets (a zero-volume stratum) are reported with status
/// "degenerate" and NaN statistics.
inline ExperimentReport rescore_experiment(const std::vector<PublishedPointSet>& sets,
                                           std::size_t reps, std::uint64_t master_seed,
                                           unsigned threads = default_thread_count()) {
    if (sets.empty()) throw domain_error("rescore_experiment: no point sets");
    detail::Stopwatch clock;
    ExperimentReport rep;
    rep.id = "rescore";
    rep.parameters["reps"] = reps;
    rep.parameters["sets"] = sets.size();
    rep.seeds = {master_seed};
    rep.records.columns = {"table", "optimizer", "d", "N", "label", "reported",
                           "mean_sq", "std_err", "z", "within_4se", "status"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < sets.size(); ++k) {
        const auto& s = sets[k];
        std::vector<Cell> row{s.table, s.optimizer, std::int64_t{s.d}, std::int64_t{s.n},
                              std::int64_t{s.label}, s.reported};
        try {
            const auto est = score_paper_pointset(s.d, s.p, reps, derive_seed(master_seed, k), threads);
            const double z = (est.mean_sq - s.reported) / (std::numbers::sqrt2 * est.std_err);
            row.insert(row.end(), {est.mean_sq, est.std_err, z,
                                   std::int64_t{std::fabs(z) <= 4.0}, std::string("ok")});
        } catch (const sampling_error&) {
            row.insert(row.end(), {nan, nan, nan, std::int64_t{0}, std::string("degenerate")});
        } catch (const domain_error&) {
            row.insert(row.end(), {nan, nan, nan, std::int64_t{0}, std::string("degenerate")});
        }
        rep.records.add_row(std::move(row));
    }
    rep.wall_clock_seconds = clock.seconds();
    return rep;
}

/// Gaussian KDE bandwidth by Scott's rule, sd * n^(-1/5). A sample without
/// spread falls back to 0.05 * sqrt(d) * n^(-1/5).
inline double scott_bandwidth(const std::vector<double>& xs, int d) {
    const double n = static_cast<double>(xs.size());
    const double factor = std::pow(n, -0.2);
    if (xs.size() < 2) return 0.05 * std::sqrt(static_cast<double>(d)) * factor;
    compensated_sum s;
    for (double x : xs) s += x;
    const double mean = s.value() / n;
    compensated_sum ss;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss.value() / (n - 1.0));
    if (!(sd > 0.0)) return 0.05 * std::sqrt(static_cast<double>(d)) * factor;
    return sd * factor;
}

/// Density of each set's cut positions on `grid` uniform points over [0, sqrt(d)].
inline ExperimentReport kde_summary(const std::vector<DiagonalCoords>& sets, int grid) {
    if (sets.empty()) throw domain_error("kde_summary: no point sets");
    if (grid < 2) throw domain_error("kde_summary: grid must have at least 2 points");
    detail::Stopwatch clock;
    ExperimentReport rep;
    rep.id = "kde";
    rep.parameters["sets"] = sets.size();
    rep.parameters["grid"] = grid;
    rep.parameters["bandwidth_rule"] = "scott";
    rep.records.columns = {"set", "d", "N", "bandwidth", "x", "density"};
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto& xs = sets[s].values();
        if (xs.empty()) throw domain_error("kde_summary: empty point set");
        const int d = sets[s].dimension();
        const double h = scott_bandwidth(xs, d);
        const double top = std::sqrt(static_cast<double>(d));
        const double norm = 1.0 / (static_cast<double>(xs.size()) * h * std::sqrt(2.0 * std::numbers::pi));
        for (int g = 0; g < grid; ++g) {
            // Built from both ends so that a symmetric set gives a symmetric grid.
            const double x = g * 2 < grid ? top * g / (grid - 1) : top - top * (grid - 1 - g) / (grid - 1);
            compensated_sum acc;
            for (double v : xs) {
                const double u = (x - v) / h;
                acc += std::exp(-0.5 * u * u);
            }
            rep.records.add_row({detail::as_int(s), std::int64_t{d}, detail::as_int(xs.size() + 1), h, x,
                                 norm * acc.value()});
        }
    }
    rep.wall_clock_seconds = clock.seconds();
    return rep;
}

} // namespace diagslice
