#pragma once

// Diffusion coefficients sigma(t, x) for dX = sigma(t, X) dW.
//
// Every coefficient carries declared bounds C1 <= sigma <= C2 together with
// regularity metadata (spatial Hoelder exponent and constant, Lipschitz
// constant in t). The scheme only ever calls sigma pointwise; the metadata
// labels experiments and selects theoretical rate overlays.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tcbm/errors.hpp"
#include "tcbm/rng.hpp"

namespace tcbm {

enum class Smoothness {
    Holder,           ///< only the Hoelder/Lipschitz bounds are claimed
    LipschitzSmooth,  ///< C^{2,2}-type smoothness is claimed as well
};

/// Anything callable as sigma(t, x) that also reports its bounds.
template <typename S>
concept Diffusion = requires(const S& s, double t, double x) {
    { s(t, x) } -> std::convertible_to<double>;
    { s.lower_bound() } -> std::convertible_to<double>;
    { s.upper_bound() } -> std::convertible_to<double>;
};

struct DiffusionTraits {
    double lower_bound = 1.0;
    double upper_bound = 1.0;
    double holder_beta = 1.0;
    double holder_constant = 0.0;  ///< C_beta in |s(t,x)-s(t,y)| <= C_beta |x-y|^beta
    double time_lipschitz = 0.0;
    Smoothness smoothness = Smoothness::Holder;
    std::string label;
};

/// Immutable, type-erased diffusion coefficient. Safe to share between
/// threads as long as the wrapped callable is pure.
class DiffusionCoefficient {
public:
    using Function = std::function<double(double, double)>;

    DiffusionCoefficient(Function f, DiffusionTraits traits)
        : f_(std::move(f)), traits_(std::move(traits)) {
        if (!f_) throw std::invalid_argument("diffusion: empty function");
        if (!(traits_.lower_bound > 0.0))
            throw std::invalid_argument("diffusion: lower bound C1 must be positive");
        if (!(traits_.upper_bound >= traits_.lower_bound))
            throw std::invalid_argument("diffusion: upper bound C2 must be >= C1");
        if (!(traits_.holder_beta > 0.0 && traits_.holder_beta <= 1.0))
            throw std::invalid_argument("diffusion: Hoelder exponent must lie in (0, 1]");
        if (!(traits_.holder_constant >= 0.0) || !(traits_.time_lipschitz >= 0.0))
            throw std::invalid_argument("diffusion: regularity constants must be non-negative");
    }

    double operator()(double t, double x) const { return f_(t, x); }
    double evaluate(double t, double x) const { return f_(t, x); }

    double lower_bound() const noexcept { return traits_.lower_bound; }
    double upper_bound() const noexcept { return traits_.upper_bound; }
    double holder_beta() const noexcept { return traits_.holder_beta; }
    double holder_constant() const noexcept { return traits_.holder_constant; }
    double time_lipschitz() const noexcept { return traits_.time_lipschitz; }
    Smoothness smoothness() const noexcept { return traits_.smoothness; }
    const std::string& label() const noexcept { return traits_.label; }
    const DiffusionTraits& traits() const noexcept { return traits_; }

private:
    Function f_;
    DiffusionTraits traits_;
};

// ---------------------------------------------------------------------------
// Built-in corpus

namespace detail {

inline std::string describe(const std::string& name, std::span<const double> params) {
    std::ostringstream os;
    os.precision(17);
    os << name << '(';
    for (std::size_t i = 0; i < params.size(); ++i) os << (i ? "," : "") << params[i];
    os << ')';
    return os.str();
}

inline void expect_arity(const std::string& name, std::span<const double> params,
                         std::size_t n, const char* usage) {
    if (params.size() != n)
        throw std::invalid_argument(name + " expects " + std::to_string(n) +
                                    " parameters " + usage + ", got " +
                                    std::to_string(params.size()));
}

inline void require(bool ok, const std::string& name, const char* what) {
    if (!ok) throw std::invalid_argument(name + ": " + what);
}

}  // namespace detail

inline const std::vector<std::string>& corpus_names() {
    static const std::vector<std::string> names{
        "constant", "smooth-sin", "time-smooth", "holder-root", "step-mollified"};
    return names;
}

/// Builds a named corpus coefficient.
///
///   constant        [c]                      sigma = c
///   smooth-sin      [a, b]                   sigma = a + b sin(x),        a > b > 0
///   time-smooth     [a, b]                   sigma = a + b sin(x + t),    a > b > 0
///   holder-root     [a, b, beta, k]          sigma = a + min(|x-k|^beta, b), beta in (0,1)
///   step-mollified  [lo, hi, center, width]  linear ramp from lo to hi across
///                                            [center - width/2, center + width/2]
///
/// Throws std::invalid_argument for unknown names or out-of-domain parameters.
inline DiffusionCoefficient builtin_coefficient(const std::string& name,
                                                std::span<const double> params) {
    using detail::expect_arity;
    using detail::require;
    const std::string label = detail::describe(name, params);

    if (name == "constant") {
        expect_arity(name, params, 1, "[c]");
        const double c = params[0];
        require(c > 0.0, name, "c must be positive");
        return {[c](double, double) { return c; },
                {c, c, 1.0, 0.0, 0.0, Smoothness::LipschitzSmooth, label}};
    }
    if (name == "smooth-sin" || name == "time-smooth") {
        expect_arity(name, params, 2, "[a, b]");
        const double a = params[0], b = params[1];
        require(b > 0.0 && a > b, name, "requires a > b > 0");
        if (name == "smooth-sin")
            return {[a, b](double, double x) { return a + b * std::sin(x); },
                    {a - b, a + b, 1.0, b, 0.0, Smoothness::LipschitzSmooth, label}};
        return {[a, b](double t, double x) { return a + b * std::sin(x + t); },
                {a - b, a + b, 1.0, b, b, Smoothness::LipschitzSmooth, label}};
    }
    if (name == "holder-root") {
        expect_arity(name, params, 4, "[a, b, beta, k]");
        const double a = params[0], b = params[1], beta = params[2], k = params[3];
        require(a > 0.0 && b > 0.0, name, "a and b must be positive");
        require(beta > 0.0 && beta < 1.0, name, "beta must lie in (0, 1)");
        return {[a, b, beta, k](double, double x) {
                    return a + std::min(std::pow(std::abs(x - k), beta), b);
                },
                {a, a + b, beta, 1.0, 0.0, Smoothness::Holder, label}};
    }
    if (name == "step-mollified") {
        expect_arity(name, params, 4, "[lo, hi, center, width]");
        const double lo = params[0], hi = params[1], center = params[2], width = params[3];
        require(lo > 0.0 && hi > 0.0, name, "levels must be positive");
        require(width > 0.0, name, "width must be positive");
        return {[lo, hi, center, width](double, double x) {
                    const double w = std::clamp((x - center) / width + 0.5, 0.0, 1.0);
                    return lo + (hi - lo) * w;
                },
                {std::min(lo, hi), std::max(lo, hi), 1.0, std::abs(hi - lo) / width, 0.0,
                 Smoothness::Holder, label}};
    }

    std::string known;
    for (const auto& n : corpus_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown coefficient '" + name + "' (available: " + known + ")");
}

inline DiffusionCoefficient builtin_coefficient(const std::string& name,
                                                std::initializer_list<double> params) {
    return builtin_coefficient(name, std::span<const double>(params.begin(), params.size()));
}

// ---------------------------------------------------------------------------
// Sampling-based contract checker

struct Rectangle {
    double t_min = 0.0;
    double t_max = 1.0;
    double x_min = -1.0;
    double x_max = 1.0;
};

struct ContractReport {
    std::size_t points_evaluated = 0;
    std::size_t bound_violations = 0;
    double worst_bound_excess = 0.0;  ///< max distance of sigma outside [C1, C2]
    double worst_t = std::numeric_limits<double>::quiet_NaN();
    double worst_x = std::numeric_limits<double>::quiet_NaN();
    double worst_value = std::numeric_limits<double>::quiet_NaN();

    std::size_t pairs_evaluated = 0;
    std::size_t holder_violations = 0;
    double worst_holder_ratio = 0.0;  ///< max |d sigma| / |dx|^beta over sampled pairs

    bool ok() const noexcept { return bound_violations == 0 && holder_violations == 0; }
};

/// Evaluates `coeff` at the rectangle corners, at x = 0 when inside the
/// rectangle, and at `samples` pseudo-random points; for each random point a
/// partner at the same t and a log-uniform spatial offset tests the declared
/// Hoelder bound. Deterministic in `seed`. Violations are reported, never thrown.
inline ContractReport check_contract(const DiffusionCoefficient& coeff, std::size_t samples,
                                     std::uint64_t seed, const Rectangle& domain) {
    if (samples < 1) throw std::invalid_argument("check_contract: samples must be >= 1");
    ContractReport rep;
    const double c1 = coeff.lower_bound();
    const double c2 = coeff.upper_bound();
    const double beta = coeff.holder_beta();
    const double c_beta = coeff.holder_constant();

    auto check_point = [&](double t, double x) {
        const double v = coeff(t, x);
        ++rep.points_evaluated;
        double excess = 0.0;
        if (std::isnan(v)) excess = std::numeric_limits<double>::infinity();
        else if (v < c1) excess = c1 - v;
        else if (v > c2) excess = v - c2;
        if (excess > 0.0) {
            ++rep.bound_violations;
            if (excess > rep.worst_bound_excess || rep.bound_violations == 1) {
                rep.worst_bound_excess = excess;
                rep.worst_t = t;
                rep.worst_x = x;
                rep.worst_value = v;
            }
        }
        return v;
    };

    for (double t : {domain.t_min, domain.t_max})
        for (double x : {domain.x_min, domain.x_max}) check_point(t, x);
    if (domain.x_min <= 0.0 && 0.0 <= domain.x_max) {
        check_point(domain.t_min, 0.0);
        check_point(0.5 * (domain.t_min + domain.t_max), 0.0);
    }

    const GaussianStream stream(seed, 0x636f6e7472616374ull);
    const double width = domain.x_max - domain.x_min;
    for (std::size_t i = 0; i < samples; ++i) {
        const double ut = stream.uniform(4 * i);
        const double ux = stream.uniform(4 * i + 1);
        const double ue = stream.uniform(4 * i + 2);
        const double us = stream.uniform(4 * i + 3);
        const double t = domain.t_min + ut * (domain.t_max - domain.t_min);
        const double x = domain.x_min + ux * width;
        const double v = check_point(t, x);

        // Offsets span 1e-4 .. 1 relative to the rectangle width (or 1e-4..1
        // absolute for degenerate widths).
        const double scale = width > 0.0 ? width : 1.0;
        const double h = scale * std::pow(10.0, -4.0 * ue);
        const double y = us < 0.5 ? x - h : x + h;
        const double w = coeff(t, y);
        ++rep.pairs_evaluated;
        const double ratio = std::abs(v - w) / std::pow(std::abs(x - y), beta);
        rep.worst_holder_ratio = std::max(rep.worst_holder_ratio, ratio);
        if (ratio > c_beta * (1.0 + 1e-9) + 1e-9) ++rep.holder_violations;
    }
    return rep;
}

}  // namespace tcbm
