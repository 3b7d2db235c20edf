#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <type_traits>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "sampling.hpp"

namespace diagslice {

/// Squared L2 star discrepancy by Warnock's formula,
///
///   3^-d - (2/N) sum_k prod_j (1 - x_kj^2)/2
///        + (1/N^2) sum_{k,l} prod_j (1 - max(x_kj, x_lj)).
///
/// The double sum visits each unordered pair once. Points are visited in
/// lexicographic order, so the result does not depend on their order. O(N^2 d).
inline double l2sq(const PointSet& ps) {
    const std::size_t n = ps.size();
    if (n == 0) throw domain_error("l2sq: empty point set");
    const int d = ps.d;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto xa = ps.point(a);
        const auto xb = ps.point(b);
        return std::lexicographical_compare(xa.begin(), xa.end(), xb.begin(), xb.end());
    });

    compensated_sum single;
    compensated_sum diag;
    compensated_sum off;
    for (std::size_t a = 0; a < n; ++a) {
        const auto xk = ps.point(order[a]);
        double u = 1.0;
        double v = 1.0;
        for (int j = 0; j < d; ++j) {
            u *= 0.5 * (1.0 - xk[j] * xk[j]);
            v *= 1.0 - xk[j];
        }
        single += u;
        diag += v;
        for (std::size_t b = a + 1; b < n; ++b) {
            const auto xl = ps.point(order[b]);
            double c = 1.0;
            for (int j = 0; j < d; ++j) c *= 1.0 - std::max(xk[j], xl[j]);
            off += c;
        }
    }
    const double nn = static_cast<double>(n);
    compensated_sum total;
    total += std::pow(3.0, -d);
    total += -2.0 / nn * single.value();
    total += (diag.value() + 2.0 * off.value()) / (nn * nn);
    return total.value();
}

/// i.i.d. uniform points as a sampling source.
struct IidSource {
    int d = 2;
    std::size_t n = 1;
};

/// Either a partition (stratified sampling) or i.i.d. points.
using SampleSource = std::variant<Partition, IidSource>;

inline int source_dimension(const SampleSource& src) {
    return std::visit(
        [](const auto& s) {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Partition>)
                return s.dimension();
            else
                return s.d;
        },
        src);
}

inline std::size_t source_size(const SampleSource& src) {
    return std::visit(
        [](const auto& s) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Partition>)
                return s.strata();
            else
                return s.n;
        },
        src);
}

namespace detail {

// Per-source sampler built once and shared read-only by all repetitions.
class SourceSampler {
public:
    explicit SourceSampler(const SampleSource& src) {
        if (const auto* part = std::get_if<Partition>(&src))
            stratified_.emplace(*part);
        else
            iid_ = std::get<IidSource>(src);
    }

    PointSet operator()(RngSpec spec) const {
        return stratified_ ? stratified_->sample(spec) : sample_iid(iid_.d, iid_.n, spec);
    }

private:
    std::optional<StratifiedSampler> stratified_;
    IidSource iid_;
};

} // namespace detail

inline PointSet draw(const SampleSource& src, RngSpec spec) {
    return detail::SourceSampler(src)(spec);
}

struct DiscrepancyEstimate {
    double mean_sq = 0.0;
    double std_err = 0.0;
    double variance = 0.0; // sample variance of the per-repetition values
    std::size_t reps = 0;
    int d = 0;
    std::size_t n = 0;
    SampleSource source = IidSource{};
};

/// Monte Carlo mean of l2sq over `reps` independent draws. Repetition i uses
/// stream (master_seed, i); per-repetition values are reduced in index order,
/// so the estimate is identical for every thread count.
inline DiscrepancyEstimate expected_l2sq(const SampleSource& src, std::size_t reps,
                                         std::uint64_t master_seed,
                                         unsigned threads = default_thread_count()) {
    if (reps < 2) throw domain_error("expected_l2sq: reps must be >= 2");
    const detail::SourceSampler sampler(src);
    std::vector<double> values(reps);
    parallel_for(reps, threads, [&](std::size_t i) {
        values[i] = l2sq(sampler(RngSpec{master_seed, i}));
    });

    const double mean = accurate_sum(values) / static_cast<double>(reps);
    compensated_sum ss;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double var = ss.value() / static_cast<double>(reps - 1);

    DiscrepancyEstimate est;
    est.mean_sq = mean;
    est.variance = var;
    est.std_err = std::sqrt(var / static_cast<double>(reps));
    est.reps = reps;
    est.d = source_dimension(src);
    est.n = source_size(src);
    est.source = src;
    return est;
}

/// E[l2sq] of N i.i.d. uniform points: (2^-d - 3^-d) / N.
inline double iid_expected_l2sq_analytic(int d, std::size_t n) {
    if (d < 1 || n < 1) throw domain_error("iid_expected_l2sq_analytic: d and N must be >= 1");
    return (std::pow(2.0, -d) - std::pow(3.0, -d)) / static_cast<double>(n);
}

} // namespace diagslice
