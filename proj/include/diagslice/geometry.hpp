#pragma once

// Partitions of [0,1]^d by hyperplanes {x : x_1 + ... + x_d = r} orthogonal
// to the main diagonal.
//
// Everything here is expressed through the Irwin-Hall CDF
//
//     F_d(x) = (1/d!) sum_{j=0}^{floor(x)} (-1)^j C(d,j) (x-j)^d,
//
// which is the volume of the cube below the hyperplane at offset x. The
// volume above the hyperplane is F_d(d - x) by the point reflection
// x -> 1 - x of the cube, so both half-space volumes share one kernel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numeric.hpp"

namespace diagslice {

/// Largest supported dimension. The alternating sum loses roughly one digit per
/// extra dimension; beyond this the 1e-10 equivolume guarantee no longer holds.
inline constexpr int max_dimension = 12;

/// Default volume tolerance of solve_r.
inline constexpr double default_solve_tol = 1e-12;

namespace detail {

inline void check_dimension(int d, const char* who) {
    if (d < 1 || d > max_dimension) {
        std::ostringstream os;
        os << who << ": dimension " << d << " outside supported range [1, "
           << max_dimension << "]";
        throw domain_error(os.str());
    }
}

inline void check_offset(int d, double r, const char* who) {
    if (!(r >= 0.0 && r <= d)) {
        std::ostringstream os;
        os << who << ": offset " << r << " outside [0, " << d << "]";
        throw domain_error(os.str());
    }
}

// Alternating sum for x <= d/2, where cancellation is mild.
inline double irwin_hall_lower(int d, double x) noexcept {
    if (x <= 0.0) return 0.0;
    const int top = std::min(d, static_cast<int>(std::floor(x)));
    compensated_sum s;
    for (int j = 0; j <= top; ++j) {
        const double term = binomial(d, j) * std::pow(x - j, d);
        s += (j % 2 == 0) ? term : -term;
    }
    return s.value() / factorial(d);
}

inline double irwin_hall_cdf(int d, double x) noexcept {
    if (x <= 0.0) return 0.0;
    if (x >= d) return 1.0;
    if (2.0 * x <= d) return irwin_hall_lower(d, x);
    return 1.0 - irwin_hall_lower(d, d - x);
}

inline double irwin_hall_pdf(int d, double x) noexcept {
    if (x <= 0.0 || x >= d) return 0.0;
    if (2.0 * x > d) x = d - x;
    const int top = std::min(d, static_cast<int>(std::floor(x)));
    compensated_sum s;
    for (int j = 0; j <= top; ++j) {
        const double term = binomial(d, j) * std::pow(x - j, d - 1);
        s += (j % 2 == 0) ? term : -term;
    }
    return s.value() / factorial(d - 1);
}

} // namespace detail

/// Volume of [0,1]^d below the hyperplane at offset r (the Irwin-Hall CDF).
inline double volume_neg(int d, double r) {
    detail::check_dimension(d, "volume_neg");
    detail::check_offset(d, r, "volume_neg");
    return detail::irwin_hall_cdf(d, r);
}

/// Volume of [0,1]^d above the hyperplane at offset r.
inline double volume_pos(int d, double r) {
    detail::check_dimension(d, "volume_pos");
    detail::check_offset(d, r, "volume_pos");
    return detail::irwin_hall_cdf(d, d - r);
}

/// Cumulative volumes f(k) = volume_pos(d, d-k), k = 0..d. The numerators of
/// f(k) * d! are integers, so the breakpoints are also kept exactly.
struct VolumeBreakpoints {
    int d = 0;
    std::vector<std::int64_t> numerator; // f(k) * d!
    std::int64_t denominator = 1;        // d!
    std::vector<double> f;
};

inline VolumeBreakpoints breakpoints(int d) {
    detail::check_dimension(d, "breakpoints");
    VolumeBreakpoints bp;
    bp.d = d;
    bp.denominator = 1;
    for (int i = 2; i <= d; ++i) bp.denominator *= i;
    bp.numerator.assign(d + 1, 0);
    bp.f.assign(d + 1, 0.0);
    for (int k = 1; k <= d; ++k) {
        std::int64_t acc = 0;
        std::int64_t choose = 1; // C(d, j)
        for (int j = 0; j < k; ++j) {
            std::int64_t power = 1;
            for (int e = 0; e < d; ++e) power *= (k - j);
            acc += (j % 2 == 0 ? 1 : -1) * choose * power;
            choose = choose * (d - j) / (j + 1);
        }
        bp.numerator[k] = acc;
        bp.f[k] = static_cast<double>(acc) / static_cast<double>(bp.denominator);
    }
    return bp;
}

/// Offset r with volume_pos(d, r) == V. The breakpoints select the unit
/// segment [d-k, d-k+1] holding the root; the polynomial is strictly monotone
/// there, so bisection followed by a Newton polish converges.
inline double solve_r(int d, double V, double tol = default_solve_tol) {
    detail::check_dimension(d, "solve_r");
    if (!(V >= 0.0 && V <= 1.0))
        throw domain_error("solve_r: volume must lie in [0,1]");
    if (!(tol > 0.0)) throw domain_error("solve_r: tolerance must be positive");
    if (V == 1.0) return 0.0;
    if (V == 0.0) return static_cast<double>(d);

    const auto bp = breakpoints(d);
    int k = 1;
    while (k < d && V > bp.f[k]) ++k;

    double lo = d - k;
    double hi = lo + 1.0;
    auto residual = [&](double r) { return detail::irwin_hall_cdf(d, d - r) - V; };

    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (residual(mid) > 0.0)
            lo = mid; // volume above mid still too large: move right
        else
            hi = mid;
    }
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 8; ++it) {
        const double g = residual(r);
        if (g == 0.0) break;
        const double slope = -detail::irwin_hall_pdf(d, r);
        if (slope == 0.0) break;
        const double next = r - g / slope;
        if (!(next >= lo && next <= hi) || next == r) break;
        r = next;
    }
    if (!(std::fabs(residual(r)) <= tol)) {
        std::ostringstream os;
        os << "solve_r: no convergence for d=" << d << " V=" << V << " within " << tol;
        throw numeric_error(os.str(), lo, hi);
    }
    return r;
}

class DiagonalCoords;

/// Dimension plus strictly increasing sum-coordinate cuts 0 < r_1 < ... < r_{N-1} < d.
class Partition {
public:
    Partition() = default;

    /// Validating constructor; throws domain_error on any invariant violation.
    Partition(int d, std::vector<double> cuts) : d_(d), cuts_(std::move(cuts)) {
        detail::check_dimension(d_, "Partition");
        for (std::size_t i = 0; i < cuts_.size(); ++i) {
            const double r = cuts_[i];
            const double prev = i == 0 ? 0.0 : cuts_[i - 1];
            if (!(r > prev && r < d_)) {
                std::ostringstream os;
                os << "Partition: cut " << i + 1 << " (" << r
                   << ") breaks 0 < r_1 < ... < r_{N-1} < d";
                throw domain_error(os.str());
            }
        }
    }

    /// The whole cube as one stratum.
    static Partition whole(int d) { return Partition(d, {}); }

    int dimension() const noexcept { return d_; }
    std::size_t strata() const noexcept { return cuts_.size() + 1; }
    const std::vector<double>& cuts() const noexcept { return cuts_; }

    /// Offset of the lower boundary of stratum i (0 for the first).
    double lower(std::size_t i) const noexcept { return i == 0 ? 0.0 : cuts_[i - 1]; }
    /// Offset of the upper boundary of stratum i (d for the last).
    double upper(std::size_t i) const noexcept {
        return i == cuts_.size() ? static_cast<double>(d_) : cuts_[i];
    }

    /// Strata in the upper half are measured from the far corner, so thin
    /// strata near r = d keep the same relative accuracy as those near 0.
    double stratum_volume(std::size_t i) const {
        const double lo = lower(i);
        const double hi = upper(i);
        if (2.0 * lo >= d_) return detail::irwin_hall_lower(d_, d_ - lo) - detail::irwin_hall_lower(d_, d_ - hi);
        return detail::irwin_hall_cdf(d_, hi) - detail::irwin_hall_cdf(d_, lo);
    }

    std::vector<double> stratum_volumes() const {
        std::vector<double> v(strata());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = stratum_volume(i);
        return v;
    }

    /// Stratum owning a coordinate sum: lower-closed, upper-open, last closed at d.
    std::size_t locate(double sum) const noexcept {
        return static_cast<std::size_t>(
            std::upper_bound(cuts_.begin(), cuts_.end(), sum) - cuts_.begin());
    }

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    int d_ = 1;
    std::vector<double> cuts_;
};

/// Cut positions as Euclidean distances p_i = r_i / sqrt(d) along the diagonal.
/// Only ordering and bounds are enforced; ties are allowed here so that
/// optimiser candidates can be represented before validation.
class DiagonalCoords {
public:
    DiagonalCoords() = default;
    DiagonalCoords(int d, std::vector<double> p) : d_(d), p_(std::move(p)) {
        detail::check_dimension(d_, "DiagonalCoords");
        const double top = std::sqrt(static_cast<double>(d_));
        for (std::size_t i = 0; i < p_.size(); ++i) {
            if (!(p_[i] >= 0.0 && p_[i] <= top) || (i > 0 && p_[i] < p_[i - 1]))
                throw domain_error("DiagonalCoords: values must be sorted within [0, sqrt(d)]");
        }
    }

    int dimension() const noexcept { return d_; }
    const std::vector<double>& values() const noexcept { return p_; }
    std::size_t size() const noexcept { return p_.size(); }

    friend bool operator==(const DiagonalCoords&, const DiagonalCoords&) = default;

private:
    int d_ = 1;
    std::vector<double> p_;
};

inline DiagonalCoords to_diagonal(const Partition& part) {
    const double s = std::sqrt(static_cast<double>(part.dimension()));
    std::vector<double> p(part.cuts().size());
    std::transform(part.cuts().begin(), part.cuts().end(), p.begin(),
                   [s](double r) { return std::min(r / s, s); });
    return {part.dimension(), std::move(p)};
}

/// Throws domain_error when the coordinates do not describe a proper partition
/// (ties, or cuts at 0 or sqrt(d)).
inline Partition from_diagonal(const DiagonalCoords& dc) {
    const double s = std::sqrt(static_cast<double>(dc.dimension()));
    std::vector<double> r(dc.size());
    std::transform(dc.values().begin(), dc.values().end(), r.begin(),
                   [s](double p) { return p * s; });
    return {dc.dimension(), std::move(r)};
}

namespace detail {

inline void check_strata(int n, int min_n, const char* who) {
    if (n < min_n) {
        std::ostringstream os;
        os << who << ": N must be >= " << min_n;
        throw domain_error(os.str());
    }
}

// Cuts for i <= N/2 come from `lower_half`; the rest are mirrored so that
// r_i + r_{N-i} == d holds exactly.
template <typename F>
std::vector<double> symmetric_cuts(int d, int n, F&& lower_half) {
    std::vector<double> cuts(static_cast<std::size_t>(n - 1));
    for (int i = 1; 2 * i < n; ++i) cuts[i - 1] = lower_half(i);
    if (n % 2 == 0) cuts[n / 2 - 1] = 0.5 * d;
    for (int i = n / 2 + 1; i < n; ++i) cuts[i - 1] = d - cuts[n - i - 1];
    return cuts;
}

} // namespace detail

/// Equivolume partition: r_i solves volume_pos(d, r_i) = 1 - i/N.
inline Partition generating_set(int d, int n, double tol = default_solve_tol) {
    detail::check_dimension(d, "generating_set");
    detail::check_strata(n, 1, "generating_set");
    return {d, detail::symmetric_cuts(d, n, [&](int i) {
                return solve_r(d, 1.0 - static_cast<double>(i) / n, tol);
            })};
}

/// Normal-quantile approximation r_i = d/2 + sqrt(d)/(2 sqrt 3) * Phi^{-1}(i/N).
/// Throws range_error instead of clamping when a cut leaves (0, d).
inline Partition normal_approx_set(int d, int n) {
    detail::check_dimension(d, "normal_approx_set");
    if (d < 2) throw domain_error("normal_approx_set: d must be >= 2");
    detail::check_strata(n, 2, "normal_approx_set");
    const double scale = std::sqrt(static_cast<double>(d)) / (2.0 * std::sqrt(3.0));
    auto cuts = detail::symmetric_cuts(d, n, [&](int i) {
        return 0.5 * d + scale * normal_quantile(static_cast<double>(i) / n);
    });
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        if (!(cuts[i] > 0.0 && cuts[i] < d)) {
            std::ostringstream os;
            os << "normal_approx_set: cut " << i + 1 << " = " << cuts[i]
               << " leaves (0, " << d << ") for N=" << n;
            throw range_error(os.str());
        }
    }
    return {d, std::move(cuts)};
}

/// Normal approximation in the body of the cube, closed-form exact cuts in the
/// two corner segments (r <= 1 and r >= d-1), where r^d = d! * V_below.
///
/// Where N > d! the normal cuts just past the corner segment fall below the
/// last exact cut (the normal tail is heavier than the Irwin-Hall tail). Those
/// cuts are replaced by exact roots until the normal value overtakes the
/// previous cut, which keeps the cuts strictly increasing.
inline Partition hybrid_set(int d, int n) {
    detail::check_dimension(d, "hybrid_set");
    if (d < 2) throw domain_error("hybrid_set: d must be >= 2");
    detail::check_strata(n, 2, "hybrid_set");
    const double dfact = factorial(d);
    const double corner = 1.0 / dfact; // f(1)
    const double scale = std::sqrt(static_cast<double>(d)) / (2.0 * std::sqrt(3.0));

    double prev = 0.0;
    return {d, detail::symmetric_cuts(d, n, [&](int i) {
                const double below = static_cast<double>(i) / n;
                double r;
                if (below <= corner) {
                    r = std::pow(dfact * below, 1.0 / d);
                } else {
                    r = 0.5 * d + scale * normal_quantile(below);
                    if (!(r > prev)) r = solve_r(d, 1.0 - below);
                }
                prev = r;
                return r;
            })};
}

/// Berry-Esseen bound C * rho / (sigma^3 sqrt(d)) for the standardised sum of
/// d uniforms, with C = 0.4748, rho = 1/32 and sigma = 1/(2 sqrt 3).
inline double berry_esseen_bound(int d) {
    if (d < 1) throw domain_error("berry_esseen_bound: d must be >= 1");
    const double s = 2.0 * std::sqrt(3.0);
    return 0.4748 * s * s * s / (32.0 * std::sqrt(static_cast<double>(d)));
}

} // namespace diagslice
