#pragma once

// Black-box search for cut positions with small expected squared L2 star
// discrepancy. Candidates live in diagonal coordinates p in [0, sqrt(d)]^(N-1)
// and are mapped to a valid partition by sort_project before evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "discrepancy.hpp"
#include "errors.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace diagslice {

enum class Algorithm { one_plus_one_es, diagonal_cma };

inline std::string to_string(Algorithm a) {
    return a == Algorithm::one_plus_one_es ? "es" : "cma";
}

struct OptimizerConfig {
    int d = 2;
    int n = 2; // strata; the search dimension is n - 1
    std::size_t budget = 1000;
    std::size_t lowfi_reps = 1500;
    std::size_t hifi_reps = 10000;
    Algorithm algorithm = Algorithm::one_plus_one_es;
    std::uint64_t master_seed = 0;
    unsigned threads = default_thread_count();

    double upper_bound() const { return std::sqrt(static_cast<double>(d)); }
    std::size_t search_dimension() const { return static_cast<std::size_t>(n - 1); }

    void validate() const {
        detail::check_dimension(d, "OptimizerConfig");
        if (n < 2) throw domain_error("OptimizerConfig: N must be >= 2");
        if (budget < 1) throw domain_error("OptimizerConfig: budget must be >= 1");
        if (lowfi_reps < 2 || hifi_reps < 2)
            throw domain_error("OptimizerConfig: repetitions must be >= 2");
    }
};

struct TrajectoryPoint {
    std::size_t evaluation = 0; // 1-based
    double best = 0.0;
};

struct OptimizerRun {
    OptimizerConfig config;
    DiagonalCoords best_candidate;
    double best_lowfi = std::numeric_limits<double>::infinity();
    double best_lowfi_se = 0.0;
    DiscrepancyEstimate best_hifi;
    std::vector<TrajectoryPoint> trajectory;
    std::vector<double> step_sizes; // global step size after each evaluation
    std::size_t eval_count = 0;
};

/// Value assigned to candidates whose partition is degenerate.
inline constexpr double worst_fitness = std::numeric_limits<double>::infinity();

/// Clamp to [0, sqrt(d)], then sort ascending.
inline DiagonalCoords sort_project(std::span<const double> x, int d) {
    detail::check_dimension(d, "sort_project");
    const double top = std::sqrt(static_cast<double>(d));
    std::vector<double> p(x.begin(), x.end());
    for (auto& v : p) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, top);
    std::sort(p.begin(), p.end());
    return {d, std::move(p)};
}

namespace detail {

constexpr std::uint64_t tag_search = 0x5EA4C4;
constexpr std::uint64_t tag_eval = 0xE7A1;
constexpr std::uint64_t tag_hifi = 0x41F1;

inline std::uint64_t eval_seed(std::uint64_t master, std::size_t index) {
    return derive_seed(derive_seed(master, tag_eval), index);
}

struct Scored {
    double mean = worst_fitness;
    double se = 0.0;
};

inline Scored score(const DiagonalCoords& candidate, std::size_t reps, std::uint64_t seed,
                    unsigned threads) {
    try {
        const auto est = expected_l2sq(from_diagonal(candidate), reps, seed, threads);
        return {est.mean_sq, est.std_err};
    } catch (const domain_error&) {
        return {};
    } catch (const sampling_error&) {
        return {};
    }
}

// Book-keeping shared by both algorithms: budget, best-so-far and trajectory.
class Tracker {
public:
    explicit Tracker(const OptimizerConfig& cfg) : cfg_(cfg) {
        run_.config = cfg;
        run_.best_candidate = DiagonalCoords(cfg.d, std::vector<double>(cfg.search_dimension(), 0.0));
    }

    bool exhausted() const { return run_.eval_count >= cfg_.budget; }

    double evaluate(const DiagonalCoords& cand) {
        const auto s = score(cand, cfg_.lowfi_reps, eval_seed(cfg_.master_seed, run_.eval_count),
                             cfg_.threads);
        ++run_.eval_count;
        if (run_.trajectory.empty() || s.mean < run_.best_lowfi) {
            run_.best_lowfi = s.mean;
            run_.best_lowfi_se = s.se;
            run_.best_candidate = cand;
        }
        run_.trajectory.push_back({run_.eval_count, run_.best_lowfi});
        return s.mean;
    }

    void record_step_size(double sigma) { run_.step_sizes.push_back(sigma); }

    OptimizerRun finish() {
        const auto seed = derive_seed(cfg_.master_seed, tag_hifi);
        try {
            run_.best_hifi = expected_l2sq(from_diagonal(run_.best_candidate), cfg_.hifi_reps,
                                           seed, cfg_.threads);
        } catch (const domain_error&) {
            run_.best_hifi.mean_sq = worst_fitness;
        } catch (const sampling_error&) {
            run_.best_hifi.mean_sq = worst_fitness;
        }
        return std::move(run_);
    }

private:
    OptimizerConfig cfg_;
    OptimizerRun run_;
};

inline std::vector<double> random_start(Rng& rng, const OptimizerConfig& cfg) {
    std::vector<double> x(cfg.search_dimension());
    for (auto& v : x) v = rng.uniform(0.0, cfg.upper_bound());
    return x;
}

} // namespace detail

/// Expected squared discrepancy of the stratified sample defined by a
/// candidate; worst_fitness when the candidate has ties, touches the bounds,
/// or has a stratum below the sampler's minimum volume.
inline double evaluate(const DiagonalCoords& candidate, std::size_t reps, RngSpec rng,
                       unsigned threads = default_thread_count()) {
    return detail::score(candidate, reps, rng.master_seed, threads).mean;
}

/// (1+1)-ES with Gaussian mutation and the multiplicative 1/5-th success rule:
/// sigma *= exp(1/3) on success and exp(-1/12) on failure, so the step size is
/// stationary at a success rate of 1/5.
inline OptimizerRun run_one_plus_one_es(const OptimizerConfig& cfg) {
    cfg.validate();
    detail::Tracker tracker(cfg);
    Rng rng(RngSpec{derive_seed(cfg.master_seed, detail::tag_search), 0});

    const double grow = std::exp(1.0 / 3.0);
    const double shrink = std::exp(-1.0 / 12.0);
    double sigma = 0.3 * cfg.upper_bound() / std::sqrt(static_cast<double>(cfg.search_dimension()));

    auto parent = sort_project(detail::random_start(rng, cfg), cfg.d);
    double parent_value = tracker.evaluate(parent);
    tracker.record_step_size(sigma);

    std::vector<double> child(cfg.search_dimension());
    while (!tracker.exhausted()) {
        for (std::size_t i = 0; i < child.size(); ++i)
            child[i] = parent.values()[i] + sigma * rng.normal();
        auto candidate = sort_project(child, cfg.d);
        const double value = tracker.evaluate(candidate);
        if (value <= parent_value) {
            parent = std::move(candidate);
            parent_value = value;
            sigma *= grow;
        } else {
            sigma *= shrink;
        }
        tracker.record_step_size(sigma);
    }
    return tracker.finish();
}

/// Population size 4 + floor(3 ln n), at least 4.
inline std::size_t cma_population(std::size_t n) {
    const auto lam = 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(n))));
    return std::max<std::size_t>(4, lam);
}

/// Separable (diagonal) CMA-ES with cumulative step-size adaptation. Sampled
/// points are clamped into the box for the distribution update and sorted
/// only for evaluation, so the sorted fitness is credited to the unsorted
/// sample. The budget counts individual evaluations; a generation cut short by
/// the budget is evaluated but not used for an update.
inline OptimizerRun run_diagonal_cma(const OptimizerConfig& cfg) {
    cfg.validate();
    detail::Tracker tracker(cfg);
    Rng rng(RngSpec{derive_seed(cfg.master_seed, detail::tag_search), 0});

    const std::size_t n = cfg.search_dimension();
    const double nd = static_cast<double>(n);
    const double top = cfg.upper_bound();

    const std::size_t lambda = cma_population(n);
    const std::size_t mu = lambda / 2;
    std::vector<double> w(mu);
    for (std::size_t i = 0; i < mu; ++i)
        w[i] = std::log(static_cast<double>(mu) + 0.5) - std::log(static_cast<double>(i + 1));
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& wi : w) wi /= wsum;
    double w2 = 0.0;
    for (double wi : w) w2 += wi * wi;
    const double mueff = 1.0 / w2;

    const double cs = (mueff + 2.0) / (nd + mueff + 5.0);
    const double ds = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (nd + 1.0)) - 1.0) + cs;
    const double cc = (4.0 + mueff / nd) / (nd + 4.0 + 2.0 * mueff / nd);
    const double mucov = mueff;
    const double ccov = std::min(
        1.0, (nd + 2.0) / 3.0 *
                 (1.0 / mucov * 2.0 / ((nd + std::sqrt(2.0)) * (nd + std::sqrt(2.0))) +
                  (1.0 - 1.0 / mucov) *
                      std::min(1.0, (2.0 * mucov - 1.0) / ((nd + 2.0) * (nd + 2.0) + mucov))));
    const double chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

    std::vector<double> mean = detail::random_start(rng, cfg);
    double sigma = 0.3 * top;
    std::vector<double> cov(n, 1.0);
    std::vector<double> ps(n, 0.0);
    std::vector<double> pc(n, 0.0);

    std::vector<std::vector<double>> ys(lambda, std::vector<double>(n));
    std::vector<double> fitness(lambda);
    std::vector<std::size_t> order(lambda);
    for (std::size_t gen = 0; !tracker.exhausted(); ++gen) {
        std::size_t evaluated = 0;
        for (std::size_t k = 0; k < lambda && !tracker.exhausted(); ++k) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = std::clamp(mean[i] + sigma * std::sqrt(cov[i]) * rng.normal(), 0.0, top);
                ys[k][i] = (x[i] - mean[i]) / sigma;
            }
            fitness[k] = tracker.evaluate(sort_project(x, cfg.d));
            tracker.record_step_size(sigma);
            ++evaluated;
        }
        if (evaluated < lambda) break;

        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });

        std::vector<double> yw(n, 0.0);
        for (std::size_t r = 0; r < mu; ++r)
            for (std::size_t i = 0; i < n; ++i) yw[i] += w[r] * ys[order[r]][i];

        double ps_norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean[i] = std::clamp(mean[i] + sigma * yw[i], 0.0, top);
            ps[i] = (1.0 - cs) * ps[i] +
                    std::sqrt(cs * (2.0 - cs) * mueff) * yw[i] / std::sqrt(cov[i]);
            ps_norm2 += ps[i] * ps[i];
        }
        const double ps_norm = std::sqrt(ps_norm2);
        const double decay = 1.0 - std::pow(1.0 - cs, 2.0 * static_cast<double>(gen + 1));
        const bool hsig = ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (nd + 1.0)) * chi_n;

        for (std::size_t i = 0; i < n; ++i) {
            pc[i] = (1.0 - cc) * pc[i] +
                    (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) * yw[i] : 0.0);
            double rank_mu = 0.0;
            for (std::size_t r = 0; r < mu; ++r) rank_mu += w[r] * ys[order[r]][i] * ys[order[r]][i];
            cov[i] = (1.0 - ccov) * cov[i] +
                     ccov / mucov * (pc[i] * pc[i] + (hsig ? 0.0 : cc * (2.0 - cc) * cov[i])) +
                     ccov * (1.0 - 1.0 / mucov) * rank_mu;
            cov[i] = std::max(cov[i], 1e-20);
        }
        sigma *= std::exp(cs / ds * (ps_norm / chi_n - 1.0));
        sigma = std::min(sigma, top);
    }
    return tracker.finish();
}

inline OptimizerRun run_optimizer(const OptimizerConfig& cfg) {
    return cfg.algorithm == Algorithm::one_plus_one_es ? run_one_plus_one_es(cfg)
                                                       : run_diagonal_cma(cfg);
}

/// Independent runs with seeds derived from cfg.master_seed; returns the run
/// with the lowest high-fidelity score.
inline OptimizerRun run_best_of(OptimizerConfig cfg, std::size_t runs) {
    if (runs < 1) throw domain_error("run_best_of: runs must be >= 1");
    const auto master = cfg.master_seed;
    OptimizerRun best;
    for (std::size_t r = 0; r < runs; ++r) {
        cfg.master_seed = derive_seed(master, r);
        auto run = run_optimizer(cfg);
        if (r == 0 || run.best_hifi.mean_sq < best.best_hifi.mean_sq) best = std::move(run);
    }
    return best;
}

} // namespace diagslice
