#pragma once

// Euler-Maruyama for dX = sigma(t, X) dW, driven by a BrownianPath read on
// SDE time (step 1/n). Used only as a baseline for convergence comparisons.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcbm/brownian.hpp"
#include "tcbm/diffusion.hpp"
#include "tcbm/format.hpp"

namespace tcbm {

class EmPath {
public:
    EmPath(std::int64_t n, double T, std::vector<double> values)
        : n_(n), T_(T), values_(std::move(values)) {}

    std::int64_t resolution() const noexcept { return n_; }
    double horizon() const noexcept { return T_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double knot_time(std::size_t k) const noexcept {
        return static_cast<double>(k) / static_cast<double>(n_);
    }

    /// Linear interpolation between Euler knots, t in [0, T].
    double at(double t) const {
        if (!(t >= 0.0 && t <= T_))
            throw std::out_of_range("EmPath: t = " + format_double(t) + " outside [0, " +
                                    format_double(T_) + "]");
        const std::size_t k = detail::grid_cell(t, n_, values_.size() - 1);
        const double tk = knot_time(k);
        if (t == tk) return values_[k];
        return values_[k] + (t - tk) * static_cast<double>(n_) * (values_[k + 1] - values_[k]);
    }

private:
    std::int64_t n_;
    double T_;
    std::vector<double> values_;
};

/// X_{k+1} = X_k + sigma(k/n, X_k) (W_{(k+1)/n} - W_{k/n}),  k < ceil(nT).
template <Diffusion S>
EmPath em_simulate(const S& sigma, const BrownianPath& driver, double T, double x0) {
    if (!(T > 0.0)) throw std::invalid_argument("em_simulate: horizon must be positive");
    const std::int64_t n = driver.resolution();
    const auto steps = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * T));
    if (driver.last_knot() < steps)
        throw std::invalid_argument("em_simulate: driver ends at " +
                                    format_double(driver.end_time()) + ", needs " +
                                    std::to_string(steps) + " steps for T = " + format_double(T));
    const auto& w = driver.values();
    std::vector<double> x(steps + 1);
    x[0] = x0;
    for (std::size_t k = 0; k < steps; ++k) {
        const double tk = static_cast<double>(k) / static_cast<double>(n);
        x[k + 1] = x[k] + sigma(tk, x[k]) * (w[k + 1] - w[k]);
    }
    return {n, T, std::move(x)};
}

/// {k/n <= T} u {T}.
inline std::vector<double> solution_breakpoints(const EmPath& p) {
    std::vector<double> out;
    for (std::size_t k = 0; k < p.values().size() && p.knot_time(k) <= p.horizon(); ++k)
        out.push_back(p.knot_time(k));
    if (out.back() != p.horizon()) out.push_back(p.horizon());
    return out;
}

inline void write_csv(std::ostream& os, const EmPath& p) {
    os << "t,x_hat\n";
    for (double t : solution_breakpoints(p))
        os << format_double(t) << ',' << format_double(p.at(t)) << '\n';
}

}  // namespace tcbm
