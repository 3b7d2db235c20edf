#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "rng.hpp"

namespace diagslice {

/// Strata with less volume than this are refused by the stratified sampler.
inline constexpr double min_stratum_volume = 1e-9;

/// Cap on cube draws is this factor times 1 / (smallest stratum volume).
inline constexpr double sampling_safety_factor = 50.0;

/// N points in [0,1]^d stored row-major, optionally labelled with strata.
struct PointSet {
    int d = 0;
    std::vector<double> coords; // size() * d values
    std::optional<std::vector<std::size_t>> strata;
    RngSpec seed;
    std::uint64_t cube_draws = 0; // uniform cube points consumed (stratified only)

    std::size_t size() const noexcept {
        return d == 0 ? 0 : coords.size() / static_cast<std::size_t>(d);
    }
    std::span<const double> point(std::size_t i) const noexcept {
        return {coords.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
    }

    friend bool operator==(const PointSet&, const PointSet&) = default;
};

/// Strata with less than this fraction of an equal share (1/N) of the volume
/// are sampled on their own slab instead of through the shared cube sweep.
inline constexpr double thin_stratum_fraction = 0.25;

/// One uniform point per stratum, by acceptance-rejection.
///
/// Ordinary strata share one sweep over uniform cube points: each draw is
/// assigned to the stratum owning its coordinate sum and kept if that stratum
/// is still empty. The first draw to land in a stratum is uniform on it.
///
/// Thin strata (near-tied cuts) would starve the sweep, so each one is
/// sampled on its own slab a <= sum < b: draw x_1..x_{d-1} uniformly, accept
/// with probability L/(b-a), where L is the length of the feasible interval
/// for x_d, then draw x_d uniformly on that interval. The accepted point is
/// uniform on the stratum as well.
///
/// Construction validates the partition once so that repeated draws are cheap.
class StratifiedSampler {
public:
    /// Throws sampling_error when a stratum is below min_stratum_volume.
    explicit StratifiedSampler(Partition part) : part_(std::move(part)) {
        const auto volumes = part_.stratum_volumes();
        const std::size_t n = volumes.size();
        std::size_t smallest = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (volumes[i] < volumes[smallest]) smallest = i;
        if (!(volumes[smallest] >= min_stratum_volume)) {
            std::ostringstream os;
            os << "sample_stratified: stratum " << smallest << " has volume "
               << volumes[smallest] << " < " << min_stratum_volume;
            throw sampling_error(os.str(), smallest);
        }

        thin_.assign(n, 0);
        slab_cap_.assign(n, 0);
        double sweep_min = 2.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (volumes[i] < thin_stratum_fraction / static_cast<double>(n)) {
                thin_[i] = 1;
                const double width = part_.upper(i) - part_.lower(i);
                slab_cap_[i] = to_cap(sampling_safety_factor * width / volumes[i]);
            } else {
                sweep_min = std::min(sweep_min, volumes[i]);
                ++sweep_strata_;
            }
        }
        sweep_cap_ = to_cap(sampling_safety_factor / sweep_min);
    }

    const Partition& partition() const noexcept { return part_; }
    bool is_thin(std::size_t stratum) const noexcept { return thin_[stratum] != 0; }

    /// Throws sampling_error naming the first empty stratum if a draw cap is hit.
    PointSet sample(RngSpec spec) const {
        const int d = part_.dimension();
        const std::size_t n = part_.strata();

        PointSet ps;
        ps.d = d;
        ps.seed = spec;
        ps.coords.assign(n * static_cast<std::size_t>(d), 0.0);
        ps.strata = std::vector<std::size_t>(n);
        for (std::size_t i = 0; i < n; ++i) (*ps.strata)[i] = i;

        Rng rng(spec);
        std::vector<double> x(static_cast<std::size_t>(d));
        auto store = [&](std::size_t s) {
            std::copy(x.begin(), x.end(),
                      ps.coords.begin() + static_cast<std::ptrdiff_t>(s * static_cast<std::size_t>(d)));
        };

        std::vector<char> filled(thin_.begin(), thin_.end());
        std::size_t remaining = sweep_strata_;
        for (std::uint64_t draws = 0; remaining > 0; ++draws) {
            if (draws >= sweep_cap_) starved(filled, draws);
            compensated_sum sum;
            for (auto& xi : x) {
                xi = rng.uniform();
                sum += xi;
            }
            const std::size_t s = part_.locate(sum.value());
            if (filled[s]) continue;
            filled[s] = 1;
            --remaining;
            store(s);
            ps.cube_draws = draws + 1;
        }

        for (std::size_t s = 0; s < n; ++s) {
            if (!thin_[s]) continue;
            const double a = part_.lower(s);
            const double b = part_.upper(s);
            for (std::uint64_t tries = 0;; ++tries) {
                if (tries >= slab_cap_[s]) {
                    std::ostringstream os;
                    os << "sample_stratified: stratum " << s << " still empty after " << tries
                       << " slab draws";
                    throw sampling_error(os.str(), s);
                }
                compensated_sum head;
                for (int j = 0; j + 1 < d; ++j) {
                    x[j] = rng.uniform();
                    head += x[j];
                }
                const double lo = std::max(0.0, a - head.value());
                const double hi = std::min(1.0, b - head.value());
                const double len = hi - lo;
                if (!(len > 0.0) || !(rng.uniform() * (b - a) < len)) continue;
                x[d - 1] = lo + len * rng.uniform();
                compensated_sum sum = head;
                sum += x[d - 1];
                if (part_.locate(sum.value()) != s) continue; // rounding at a boundary
                store(s);
                break;
            }
        }
        return ps;
    }

private:
    static std::uint64_t to_cap(double c) noexcept {
        return c >= 9e18 ? std::numeric_limits<std::uint64_t>::max()
                         : static_cast<std::uint64_t>(c);
    }

    [[noreturn]] static void starved(const std::vector<char>& filled, std::uint64_t draws) {
        std::size_t s = 0;
        while (filled[s]) ++s;
        std::ostringstream os;
        os << "sample_stratified: stratum " << s << " still empty after " << draws << " draws";
        throw sampling_error(os.str(), s);
    }

    Partition part_;
    std::vector<char> thin_;
    std::vector<std::uint64_t> slab_cap_;
    std::size_t sweep_strata_ = 0;
    std::uint64_t sweep_cap_ = 0;
};

inline PointSet sample_stratified(const Partition& part, RngSpec spec) {
    return StratifiedSampler(part).sample(spec);
}

/// N i.i.d. uniform points, unlabelled.
inline PointSet sample_iid(int d, std::size_t n, RngSpec spec) {
    if (d < 1) throw domain_error("sample_iid: d must be >= 1");
    if (n < 1) throw domain_error("sample_iid: N must be >= 1");
    PointSet ps;
    ps.d = d;
    ps.seed = spec;
    ps.coords.resize(n * static_cast<std::size_t>(d));
    Rng rng(spec);
    for (auto& c : ps.coords) c = rng.uniform();
    return ps;
}

} // namespace diagslice
