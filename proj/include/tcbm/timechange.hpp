#pragma once

// Time-change discretization of dX = sigma(t, X) dW.
//
// With xi = X0 + b a Brownian motion, the solution is X_t = xi(tau(t)) where
// tau is the inverse of the random time change
//
//     phi(s) = int_0^s du / sigma^2(phi(u), xi(u)).
//
// The scheme replaces phi by its explicit Euler polygon phi_n on the grid
// k/n (using the knot values xi(k/n)), inverts that polygon exactly, and
// reads the linearly interpolated Brownian path at the inverted time:
//
//     X_hat(t) = xi_n(tau_n(t)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tcbm/brownian.hpp"
#include "tcbm/diffusion.hpp"
#include "tcbm/errors.hpp"
#include "tcbm/format.hpp"

namespace tcbm {

/// Euler polygon phi_n: knots (k/n, phi_n(k/n)) for k = 0..K, where K is the
/// first knot with phi_n(K/n) >= T.
class TimeChangePath {
public:
    std::int64_t resolution() const noexcept { return n_; }
    double sde_horizon() const noexcept { return horizon_; }
    const std::vector<double>& knots() const noexcept { return phi_; }
    std::size_t last_knot() const noexcept { return phi_.size() - 1; }
    double brownian_time(std::size_t k) const noexcept {
        return static_cast<double>(k) / static_cast<double>(n_);
    }
    double end_brownian_time() const noexcept { return brownian_time(last_knot()); }
    double end_sde_time() const noexcept { return phi_.back(); }

    /// phi_n(s) by linear interpolation between knots, s in [0, K/n].
    double at(double s) const {
        if (!(s >= 0.0 && s <= end_brownian_time()))
            throw std::out_of_range("timechange: Brownian time " + format_double(s) +
                                    " outside the constructed range");
        const std::size_t k = detail::grid_cell(s, n_, last_knot());
        const double sk = brownian_time(k);
        if (s == sk) return phi_[k];
        return phi_[k] + (s - sk) * static_cast<double>(n_) * (phi_[k + 1] - phi_[k]);
    }

    /// Inverse polygon tau_n(t) given the interval index k with
    /// phi[k] <= t < phi[k+1] (or k = K and t = phi[K]).
    double invert_in(std::size_t k, double t) const {
        if (t == phi_[k] || k == last_knot()) return brownian_time(k);
        const double dphi = phi_[k + 1] - phi_[k];
        if (!(dphi >= 1e-300))
            throw ContractBreach("timechange", "degenerate time-change step of width " +
                                                   format_double(dphi) + " at knot " +
                                                   std::to_string(k));
        return brownian_time(k) + (t - phi_[k]) / dphi / static_cast<double>(n_);
    }

    /// Interval index containing SDE time t (binary search).
    std::size_t locate(double t) const {
        if (!(t >= 0.0 && t <= phi_.back()))
            throw std::out_of_range("timechange: SDE time " + format_double(t) + " outside [0, " +
                                    format_double(phi_.back()) + "]");
        const auto it = std::upper_bound(phi_.begin(), phi_.end(), t);
        return static_cast<std::size_t>(it - phi_.begin()) - 1;
    }

private:
    TimeChangePath() = default;

    std::int64_t n_ = 1;
    double horizon_ = 0.0;
    std::vector<double> phi_;

    template <Diffusion S>
    friend TimeChangePath build_time_change(const BrownianPath&, const S&, double);
};

/// Euler integration of the time-change ODE driven by the knot values of xi:
///
///     phi_n((k+1)/n) = phi_n(k/n) + (1/n) / sigma^2(phi_n(k/n), xi(k/n)),
///
/// stopped at the first knot where phi_n >= T.
///
/// Throws PathExhausted if xi ends first, ContractBreach if sigma leaves
/// its declared [C1, C2].
template <Diffusion S>
TimeChangePath build_time_change(const BrownianPath& xi, const S& sigma, double T) {
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::invalid_argument("build_time_change: SDE horizon must be positive");
    const double c1 = sigma.lower_bound();
    const double c2 = sigma.upper_bound();
    const double dt = 1.0 / static_cast<double>(xi.resolution());
    const auto& xs = xi.values();

    TimeChangePath p;
    p.n_ = xi.resolution();
    p.horizon_ = T;
    p.phi_.reserve(static_cast<std::size_t>(std::ceil(T * c2 * c2 / dt)) + 2);
    p.phi_.push_back(0.0);
    for (std::size_t k = 0; p.phi_.back() < T; ++k) {
        if (k >= xi.last_knot())
            throw PathExhausted("build_time_change: Brownian path ends at " +
                                format_double(xi.end_time()) + " before phi_n reaches T = " +
                                format_double(T));
        const double phi_k = p.phi_[k];
        const double s = sigma(phi_k, xs[k]);
        if (!(s >= c1 && s <= c2))
            throw ContractBreach("timechange", "sigma(" + format_double(phi_k) + ", " +
                                                   format_double(xs[k]) + ") = " + format_double(s) +
                                                   " outside declared [" + format_double(c1) + ", " +
                                                   format_double(c2) + "]");
        p.phi_.push_back(phi_k + dt / (s * s));
    }
    return p;
}

/// tau_n(t): exact inverse of the phi_n polygon.
inline double invert(const TimeChangePath& phi, double t) {
    return phi.invert_in(phi.locate(t), t);
}

/// Forward-only evaluator of tau_n for non-decreasing query sequences.
/// Falls back to binary search when a query moves backwards.
class InverseCursor {
public:
    explicit InverseCursor(const TimeChangePath& phi) : phi_(&phi) {}

    double operator()(double t) {
        const auto& knots = phi_->knots();
        if (!(t >= knots[k_]) || t > knots.back()) {
            k_ = phi_->locate(t);
        } else {
            while (k_ + 1 < knots.size() && knots[k_ + 1] <= t) ++k_;
        }
        return phi_->invert_in(k_, t);
    }

private:
    const TimeChangePath* phi_;
    std::size_t k_ = 0;
};

/// One approximate solution path: a Brownian path together with the time
/// change built from it.
class SamplePath {
public:
    const BrownianPath& brownian() const noexcept { return xi_; }
    const TimeChangePath& time_change() const noexcept { return phi_; }
    double horizon() const noexcept { return T_; }

private:
    SamplePath(BrownianPath xi, TimeChangePath phi, double T)
        : xi_(std::move(xi)), phi_(std::move(phi)), T_(T) {}

    BrownianPath xi_;
    TimeChangePath phi_;
    double T_;

    template <Diffusion S>
    friend SamplePath make_sample_path(BrownianPath, const S&, double);
};

/// Builds the time change on `xi`, extending the Brownian path (same stream,
/// prefix preserved) until it covers the SDE horizon.
template <Diffusion S>
SamplePath make_sample_path(BrownianPath xi, const S& sigma, double T) {
    for (;;) {
        try {
            auto phi = build_time_change(xi, sigma, T);
            return SamplePath(std::move(xi), std::move(phi), T);
        } catch (const PathExhausted&) {
            const double needed = sigma.upper_bound() * sigma.upper_bound() * T;
            xi = extend(xi, std::max(2.0 * xi.horizon(), 1.1 * needed + 2.0 / xi.resolution()));
        }
    }
}

/// X_hat(t) = xi_n(tau_n(t)) for t in [0, T].
inline double evaluate_solution(const SamplePath& sp, double t) {
    if (!(t >= 0.0 && t <= sp.horizon()))
        throw std::out_of_range("evaluate_solution: t = " + format_double(t) + " outside [0, " +
                                format_double(sp.horizon()) + "]");
    return interpolate(sp.brownian(), invert(sp.time_change(), t));
}

/// Same as evaluate_solution, amortized O(1) for non-decreasing queries.
class SolutionCursor {
public:
    explicit SolutionCursor(const SamplePath& sp) : sp_(&sp), inverse_(sp.time_change()) {}

    double operator()(double t) {
        if (!(t >= 0.0 && t <= sp_->horizon()))
            throw std::out_of_range("evaluate_solution: t = " + format_double(t) +
                                    " outside [0, " + format_double(sp_->horizon()) + "]");
        return interpolate(sp_->brownian(), inverse_(t));
    }

private:
    const SamplePath* sp_;
    InverseCursor inverse_;
};

/// X_hat is affine between consecutive entries: {0} u {phi_n(k/n) <= T} u {T}.
inline std::vector<double> solution_breakpoints(const SamplePath& sp) {
    const auto& phi = sp.time_change().knots();
    const double T = sp.horizon();
    std::vector<double> out;
    out.reserve(phi.size() + 1);
    out.push_back(0.0);
    for (std::size_t k = 1; k < phi.size() && phi[k] <= T; ++k) out.push_back(phi[k]);
    if (out.back() != T) out.push_back(T);
    return out;
}

/// Plot dump: t,x_hat over the solution breakpoints.
inline void write_csv(std::ostream& os, const SamplePath& sp) {
    os << "t,x_hat\n";
    SolutionCursor x(sp);
    for (double t : solution_breakpoints(sp))
        os << format_double(t) << ',' << format_double(x(t)) << '\n';
}

// ---------------------------------------------------------------------------
// Comparison of two time changes built on one Brownian realization.

struct TimeChangeDiscrepancy {
    double tau_sup = 0.0;  ///< sup_{t <= T} |tau_a(t) - tau_b(t)|
    double phi_sup = 0.0;  ///< sup_{s <= s_max} |phi_a(s) - phi_b(s)|, s_max <= C2^2 T
    double bound(double upper_bound) const noexcept {
        return upper_bound * upper_bound * phi_sup;
    }
};

/// Both suprema are exact: tau_a - tau_b is affine between the union of the
/// two phi knot sets, and phi_a - phi_b is affine between the knots of the
/// finer grid (which contains the coarser one). The phi supremum runs over
/// s <= min(C2^2 T, common constructed range).
inline TimeChangeDiscrepancy time_change_discrepancy(const TimeChangePath& a,
                                                     const TimeChangePath& b,
                                                     double upper_bound) {
    const TimeChangePath& coarse = a.resolution() <= b.resolution() ? a : b;
    const TimeChangePath& fine = a.resolution() <= b.resolution() ? b : a;
    if (fine.resolution() % coarse.resolution() != 0)
        throw std::invalid_argument("time_change_discrepancy: resolutions are not nested");
    const double T = std::min(a.sde_horizon(), b.sde_horizon());

    TimeChangeDiscrepancy d;
    {
        InverseCursor ia(a), ib(b);
        const auto& ka = a.knots();
        const auto& kb = b.knots();
        std::size_t i = 0, j = 0;
        auto visit = [&](double t) { d.tau_sup = std::max(d.tau_sup, std::abs(ia(t) - ib(t))); };
        while (true) {
            const double ta = i < ka.size() ? ka[i] : T;
            const double tb = j < kb.size() ? kb[j] : T;
            const double t = std::min({ta, tb, T});
            visit(t);
            if (t >= T) break;
            if (ta == t) ++i;
            if (tb == t) ++j;
        }
    }
    {
        const double s_max = std::min({upper_bound * upper_bound * T, a.end_brownian_time(),
                                       b.end_brownian_time()});
        const auto& kf = fine.knots();
        const std::size_t step = static_cast<std::size_t>(fine.resolution() / coarse.resolution());
        const auto& kc = coarse.knots();
        const double ratio = 1.0 / static_cast<double>(step);
        for (std::size_t j = 0; j < kf.size() && fine.brownian_time(j) <= s_max; ++j) {
            const std::size_t c = j / step;
            const std::size_t r = j % step;
            const double pc = r == 0 ? kc[c]
                                     : kc[c] + static_cast<double>(r) * ratio * (kc[c + 1] - kc[c]);
            d.phi_sup = std::max(d.phi_sup, std::abs(kf[j] - pc));
        }
        d.phi_sup = std::max(d.phi_sup, std::abs(fine.at(s_max) - coarse.at(s_max)));
    }
    return d;
}

}  // namespace tcbm
