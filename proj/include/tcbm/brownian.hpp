#pragma once

// Seeded Brownian paths on a uniform grid in Brownian time, with the
// piecewise-linear interpolant and exact subsampling for coarse/fine coupling.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tcbm/format.hpp"
#include "tcbm/rng.hpp"

namespace tcbm {

namespace detail {

/// Index k with k/n <= t < (k+1)/n on the grid {0, 1/n, ..., last/n}, clamped
/// to last. Corrects the rounding of floor(t*n) against the doubles k/n.
inline std::size_t grid_cell(double t, std::int64_t n, std::size_t last) noexcept {
    const double nd = static_cast<double>(n);
    const double f = std::floor(t * nd);
    auto k = f <= 0.0 ? std::size_t{0} : static_cast<std::size_t>(f);
    if (k > last) k = last;
    while (k > 0 && static_cast<double>(k) / nd > t) --k;
    while (k < last && static_cast<double>(k + 1) / nd <= t) ++k;
    return k;
}

}  // namespace detail

/// xi at knots 0, 1/n, 2/n, ... of Brownian time; values()[0] = X0.
///
/// A path remembers the resolution it was generated at (`source_resolution`)
/// so that a subsampled path can be extended without breaking coupling.
class BrownianPath {
public:
    std::int64_t resolution() const noexcept { return n_; }
    double horizon() const noexcept { return horizon_; }
    double x0() const noexcept { return values_.front(); }
    std::uint64_t seed() const noexcept { return master_seed_; }
    std::uint64_t sample_index() const noexcept { return sample_index_; }
    std::int64_t source_resolution() const noexcept { return n_ * stride_; }

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t knot_count() const noexcept { return values_.size(); }
    std::size_t last_knot() const noexcept { return values_.size() - 1; }
    double knot_time(std::size_t k) const noexcept {
        return static_cast<double>(k) / static_cast<double>(n_);
    }
    double end_time() const noexcept { return knot_time(last_knot()); }

private:
    BrownianPath() = default;

    std::int64_t n_ = 1;
    std::int64_t stride_ = 1;
    bool from_stream_ = true;
    double horizon_ = 0.0;
    std::uint64_t master_seed_ = 0;
    std::uint64_t sample_index_ = 0;
    std::vector<double> values_;

    friend BrownianPath generate_path(std::int64_t, double, double, std::uint64_t,
                                      std::uint64_t);
    friend BrownianPath subsample(const BrownianPath&, std::int64_t);
    friend BrownianPath path_from_values(std::int64_t, std::vector<double>);
    friend BrownianPath extend(const BrownianPath&, double);
};

/// Knot count floor(n * horizon) + 1; increments are N(0, 1/n) draws taken
/// from the counter stream of (master_seed, sample_index) in increment order.
inline BrownianPath generate_path(std::int64_t n, double horizon, double x0,
                                  std::uint64_t master_seed, std::uint64_t sample_index) {
    if (n < 1) throw std::invalid_argument("generate_path: resolution n must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("generate_path: horizon must be positive and finite");

    const auto steps = static_cast<std::size_t>(std::floor(static_cast<double>(n) * horizon));
    BrownianPath p;
    p.n_ = n;
    p.horizon_ = horizon;
    p.master_seed_ = master_seed;
    p.sample_index_ = sample_index;
    p.values_.resize(steps + 1);
    p.values_[0] = x0;

    const GaussianStream stream(master_seed, sample_index);
    const double sd = std::sqrt(1.0 / static_cast<double>(n));
    std::vector<double> z(steps);
    stream.normals(0, steps, z.begin());
    for (std::size_t k = 0; k < steps; ++k) p.values_[k + 1] = p.values_[k] + sd * z[k];
    return p;
}

/// Wraps explicit knot values (k/n, values[k]). Such a path has no stream
/// behind it and cannot be extended.
inline BrownianPath path_from_values(std::int64_t n, std::vector<double> values) {
    if (n < 1) throw std::invalid_argument("path_from_values: resolution n must be >= 1");
    if (values.size() < 2) throw std::invalid_argument("path_from_values: need at least two knots");
    BrownianPath p;
    p.n_ = n;
    p.horizon_ = static_cast<double>(values.size() - 1) / static_cast<double>(n);
    p.from_stream_ = false;
    p.values_ = std::move(values);
    return p;
}

/// Every factor-th knot of `path`; shared knots agree bit-exactly.
inline BrownianPath subsample(const BrownianPath& path, std::int64_t factor) {
    if (factor < 1 || path.n_ % factor != 0)
        throw std::invalid_argument("subsample: factor " + std::to_string(factor) +
                                    " does not divide resolution " + std::to_string(path.n_));
    BrownianPath q;
    q.n_ = path.n_ / factor;
    q.stride_ = path.stride_ * factor;
    q.horizon_ = path.horizon_;
    q.master_seed_ = path.master_seed_;
    q.sample_index_ = path.sample_index_;
    q.from_stream_ = path.from_stream_;
    const std::size_t steps = path.last_knot() / static_cast<std::size_t>(factor);
    q.values_.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k)
        q.values_[k] = path.values_[k * static_cast<std::size_t>(factor)];
    return q;
}

/// Same realization over a longer horizon. The existing knots are reproduced
/// bit-exactly because the increments continue the same counter sequence.
inline BrownianPath extend(const BrownianPath& path, double new_horizon) {
    if (!path.from_stream_)
        throw std::logic_error("extend: path was not generated from a random stream");
    if (!(new_horizon >= path.horizon()))
        throw std::invalid_argument("extend: new horizon is shorter than the current one");
    const auto fine = generate_path(path.source_resolution(), new_horizon, path.x0(),
                                    path.seed(), path.sample_index());
    return subsample(fine, path.source_resolution() / path.resolution());
}

/// Linear interpolant of the knot values. Returns the stored value exactly
/// when t is a knot time k/n.
inline double interpolate(const BrownianPath& path, double t) {
    const double n = static_cast<double>(path.resolution());
    if (!(t >= 0.0 && t <= path.end_time()))
        throw std::out_of_range("interpolate: Brownian time " + format_double(t) +
                                " outside [0, " + format_double(path.end_time()) + "]");
    const std::size_t k = detail::grid_cell(t, path.resolution(), path.last_knot());
    const auto& v = path.values();
    const double tk = path.knot_time(k);
    if (t == tk) return v[k];
    const double w = (t - tk) * n;
    return v[k] + w * (v[k + 1] - v[k]);
}

/// Brownian provision for SDE horizon T: phi(s) >= s / C2^2 gives tau(T) <= C2^2 T;
/// the slack covers the final overshooting step.
inline double provision_horizon(double upper_bound, double sde_horizon, std::int64_t n) {
    return 1.1 * upper_bound * upper_bound * sde_horizon + 2.0 / static_cast<double>(n);
}

/// Debug dump: knot_index,time,value.
inline void write_csv(std::ostream& os, const BrownianPath& path) {
    os << "knot_index,time,value\n";
    for (std::size_t k = 0; k < path.knot_count(); ++k)
        os << k << ',' << format_double(path.knot_time(k)) << ','
           << format_double(path.values()[k]) << '\n';
}

}  // namespace tcbm
