#pragma once

// Coupled Monte Carlo strong-error estimation.
//
// For each sample one fine Brownian path is drawn at the reference
// resolution; every coarse resolution is obtained by subsampling it, so all
// discretizations share one realization. The strong error at resolution n is
// the L^p mean over samples of sup_{t <= T} |X_hat^n(t) - X_hat^ref(t)|,
// computed exactly over the union of both paths' breakpoints. The empirical
// order is the least-squares slope of log(error) against log(1/n).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tcbm/baseline.hpp"
#include "tcbm/brownian.hpp"
#include "tcbm/diffusion.hpp"
#include "tcbm/errors.hpp"
#include "tcbm/timechange.hpp"
#include "tcbm/version.hpp"

namespace tcbm {

enum class Scheme { TimeChange, EulerMaruyama };

inline const char* to_string(Scheme s) noexcept {
    return s == Scheme::TimeChange ? "time-change" : "euler-maruyama";
}

struct ExperimentConfig {
    std::string coefficient = "smooth-sin";
    std::vector<double> params{2.0, 1.0};
    double T = 1.0;
    double x0 = 0.0;
    std::vector<std::int64_t> resolutions{16, 32, 64, 128, 256, 512, 1024};
    std::int64_t ref_resolution = 16384;
    double p = 2.0;
    std::int64_t samples = 1000;
    std::uint64_t master_seed = 1;
    Scheme scheme = Scheme::TimeChange;
    bool compare = false;  ///< run both schemes side by side

    bool operator==(const ExperimentConfig&) const = default;
};

inline DiffusionCoefficient make_coefficient(const ExperimentConfig& cfg) {
    try {
        return builtin_coefficient(cfg.coefficient, cfg.params);
    } catch (const std::invalid_argument& e) {
        const bool unknown = std::find(corpus_names().begin(), corpus_names().end(),
                                       cfg.coefficient) == corpus_names().end();
        throw ConfigError(unknown ? "coefficient" : "params", e.what());
    }
}

/// Structural checks needed to simulate a single sample.
inline void validate_structure(const ExperimentConfig& cfg) {
    make_coefficient(cfg);
    if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw ConfigError("T", "must be positive");
    if (!std::isfinite(cfg.x0)) throw ConfigError("x0", "must be finite");
    if (cfg.ref_resolution < 1) throw ConfigError("ref_resolution", "must be >= 1");
    if (cfg.resolutions.empty()) throw ConfigError("resolutions", "must not be empty");
    for (std::size_t i = 0; i < cfg.resolutions.size(); ++i) {
        const auto n = cfg.resolutions[i];
        if (n < 1) throw ConfigError("resolutions", "entries must be >= 1");
        if (i > 0 && n <= cfg.resolutions[i - 1])
            throw ConfigError("resolutions", "must be strictly increasing");
        if (cfg.ref_resolution % n != 0)
            throw ConfigError("resolutions", std::to_string(n) + " does not divide ref_resolution " +
                                                 std::to_string(cfg.ref_resolution));
    }
    if (!(cfg.p >= 1.0) || !std::isfinite(cfg.p)) throw ConfigError("p", "must be >= 1");
    if (cfg.samples < 1) throw ConfigError("samples", "must be >= 1");
}

/// Full experiment checks: the reference sits at least 4x above the ladder.
inline void validate(const ExperimentConfig& cfg) {
    validate_structure(cfg);
    if (cfg.ref_resolution < 4 * cfg.resolutions.back())
        throw ConfigError("ref_resolution", "must be at least 4 x max(resolutions) = " +
                                                std::to_string(4 * cfg.resolutions.back()));
}

// ---------------------------------------------------------------------------
// Exact sup of |f - g| for two piecewise-linear paths on [0, T]

/// Both breakpoint lists are sorted and share first (0) and last (T) entries.
/// The difference of two piecewise-linear functions is affine between
/// consecutive union points, so |f - g| peaks on the union.
template <typename F, typename G>
double sup_abs_difference(std::span<const double> bf, F&& f, std::span<const double> bg, G&& g) {
    double sup = 0.0;
    std::size_t i = 0, j = 0;
    while (i < bf.size() || j < bg.size()) {
        double t;
        if (j >= bg.size() || (i < bf.size() && bf[i] < bg[j])) t = bf[i++];
        else if (i >= bf.size() || bg[j] < bf[i]) t = bg[j++];
        else {
            t = bf[i];
            ++i;
            ++j;
        }
        sup = std::max(sup, std::abs(f(t) - g(t)));
    }
    return sup;
}

inline double sup_abs_difference(const SamplePath& a, const SamplePath& b) {
    const auto ba = solution_breakpoints(a);
    const auto bb = solution_breakpoints(b);
    return sup_abs_difference(ba, SolutionCursor(a), bb, SolutionCursor(b));
}

inline double sup_abs_difference(const EmPath& a, const EmPath& b) {
    const auto ba = solution_breakpoints(a);
    const auto bb = solution_breakpoints(b);
    return sup_abs_difference(
        ba, [&](double t) { return a.at(t); }, bb, [&](double t) { return b.at(t); });
}

// ---------------------------------------------------------------------------
// One sample

struct SampleErrors {
    std::vector<double> sup_error;                   ///< one per resolution
    std::vector<TimeChangeDiscrepancy> time_change;  ///< time-change scheme only
};

inline std::int64_t factor_for(const ExperimentConfig& cfg, std::int64_t n) {
    return cfg.ref_resolution / n;
}

/// Reference path of the time-change scheme for one sample.
inline SamplePath reference_sample_path(const ExperimentConfig& cfg,
                                        const DiffusionCoefficient& sigma,
                                        std::uint64_t sample_index) {
    const double horizon =
        provision_horizon(sigma.upper_bound(), cfg.T, cfg.resolutions.front());
    return make_sample_path(
        generate_path(cfg.ref_resolution, horizon, cfg.x0, cfg.master_seed, sample_index), sigma,
        cfg.T);
}

/// Driver of the Euler-Maruyama baseline (Brownian time = SDE time).
inline BrownianPath em_driver(const ExperimentConfig& cfg, std::uint64_t sample_index) {
    const double horizon = cfg.T + 2.0 / static_cast<double>(cfg.resolutions.front());
    return generate_path(cfg.ref_resolution, horizon, 0.0, cfg.master_seed, sample_index);
}

inline SampleErrors strong_error_one_sample(const ExperimentConfig& cfg,
                                            const DiffusionCoefficient& sigma,
                                            std::uint64_t sample_index) {
    SampleErrors out;
    out.sup_error.reserve(cfg.resolutions.size());
    if (cfg.scheme == Scheme::TimeChange) {
        const SamplePath ref = reference_sample_path(cfg, sigma, sample_index);
        const auto ref_breaks = solution_breakpoints(ref);
        for (const auto n : cfg.resolutions) {
            const SamplePath coarse =
                make_sample_path(subsample(ref.brownian(), factor_for(cfg, n)), sigma, cfg.T);
            const auto coarse_breaks = solution_breakpoints(coarse);
            out.sup_error.push_back(sup_abs_difference(coarse_breaks, SolutionCursor(coarse),
                                                       ref_breaks, SolutionCursor(ref)));
            out.time_change.push_back(time_change_discrepancy(
                coarse.time_change(), ref.time_change(), sigma.upper_bound()));
        }
    } else {
        const BrownianPath driver = em_driver(cfg, sample_index);
        const EmPath ref = em_simulate(sigma, driver, cfg.T, cfg.x0);
        for (const auto n : cfg.resolutions) {
            const EmPath coarse =
                em_simulate(sigma, subsample(driver, factor_for(cfg, n)), cfg.T, cfg.x0);
            out.sup_error.push_back(sup_abs_difference(coarse, ref));
        }
    }
    return out;
}

inline SampleErrors strong_error_one_sample(const ExperimentConfig& cfg,
                                            std::uint64_t sample_index) {
    validate_structure(cfg);
    return strong_error_one_sample(cfg, make_coefficient(cfg), sample_index);
}

// ---------------------------------------------------------------------------
// Rate regression

struct OrderFit {
    double order = std::numeric_limits<double>::quiet_NaN();
    double standard_error = std::numeric_limits<double>::quiet_NaN();
    std::size_t points = 0;
};

/// Errors below this are treated as floating-point noise and left out of fits.
inline constexpr double kFitFloor = 1e-12;

/// OLS slope of log(error) against log(1/n).
inline OrderFit fit_order(std::span<const std::int64_t> n, std::span<const double> error) {
    if (n.size() != error.size()) throw std::invalid_argument("fit_order: size mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(error[i] >= kFitFloor)) continue;
        xs.push_back(-std::log(static_cast<double>(n[i])));
        ys.push_back(std::log(error[i]));
    }
    OrderFit fit;
    fit.points = xs.size();
    if (xs.size() < 2) return fit;
    const double m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.order = sxy / sxx;
    if (xs.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double r = ys[i] - (my + fit.order * (xs[i] - mx));
            rss += r * r;
        }
        fit.standard_error = std::sqrt(rss / (m - 2.0) / sxx);
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Experiment

/// Reporting-only exponent alpha < 1/2 for the theoretical overlays.
inline constexpr double kOverlayAlpha = 0.49;

struct TheoreticalOrders {
    double alpha = kOverlayAlpha;
    double holder = std::numeric_limits<double>::quiet_NaN();  ///< alpha^2 beta
    double smooth = std::numeric_limits<double>::quiet_NaN();  ///< alpha, smooth sigma only
    double euler_maruyama = std::numeric_limits<double>::quiet_NaN();  ///< beta - 1/2, beta > 1/2
};

inline TheoreticalOrders theoretical_orders(const DiffusionCoefficient& sigma) {
    TheoreticalOrders th;
    th.holder = th.alpha * th.alpha * sigma.holder_beta();
    if (sigma.smoothness() == Smoothness::LipschitzSmooth) th.smooth = th.alpha;
    if (sigma.holder_beta() > 0.5) th.euler_maruyama = sigma.holder_beta() - 0.5;
    return th;
}

struct ResolutionError {
    std::int64_t n = 0;
    double mean_error = 0.0;  ///< ((1/M) sum err^p)^(1/p)
    double standard_error = 0.0;     ///< delta-method standard error of mean_error
};

struct RateReport {
    ExperimentConfig config;
    std::string coefficient_label;
    std::vector<ResolutionError> per_resolution;
    double fitted_order = std::numeric_limits<double>::quiet_NaN();
    double fit_stderr = std::numeric_limits<double>::quiet_NaN();
    std::size_t fit_points = 0;
    TheoreticalOrders theory;

    // Discrete time-change comparison, checked on every (sample, resolution).
    std::size_t time_change_checks = 0;
    std::size_t time_change_violations = 0;
    double time_change_worst_ratio = 0.0;  ///< max tau_sup / (C2^2 phi_sup)

    std::string version = version_string();

    /// Per-sample sup errors [sample][resolution]; not serialized.
    std::vector<std::vector<double>> sample_errors;
};

/// Absolute slack allowed in the tau/phi inequality.
inline constexpr double kTimeChangeSlack = 1e-10;

/// Runs every sample (in parallel over `jobs` workers) and returns the
/// per-sample results in sample order. A failure aborts the run and is
/// rethrown for the lowest failing sample index.
inline std::vector<SampleErrors> run_samples(const ExperimentConfig& cfg,
                                             const DiffusionCoefficient& sigma, unsigned jobs) {
    const auto m = static_cast<std::size_t>(cfg.samples);
    std::vector<SampleErrors> results(m);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::size_t fail_index = m;
    std::exception_ptr fail;

    auto worker = [&] {
        for (;;) {
            if (failed.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= m) return;
            try {
                results[i] = strong_error_one_sample(cfg, sigma, i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < fail_index) {
                    fail_index = i;
                    fail = std::current_exception();
                }
                failed.store(true);
            }
        }
    };

    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(m)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
    }

    if (fail) {
        try {
            std::rethrow_exception(fail);
        } catch (ContractBreach& e) {
            e.set_sample_index(fail_index);
            throw;
        } catch (const std::exception& e) {
            throw std::runtime_error("sample " + std::to_string(fail_index) + ": " + e.what());
        }
    }
    return results;
}

inline unsigned default_jobs() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1u : hc;
}

inline RateReport run_experiment(const ExperimentConfig& cfg, unsigned jobs = default_jobs()) {
    validate(cfg);
    if (cfg.samples < 2) throw ConfigError("samples", "an experiment needs at least 2 samples");
    const DiffusionCoefficient sigma = make_coefficient(cfg);
    const auto results = run_samples(cfg, sigma, jobs);

    RateReport rep;
    rep.config = cfg;
    rep.coefficient_label = sigma.label();
    rep.theory = theoretical_orders(sigma);

    const double M = static_cast<double>(cfg.samples);
    const double c2sq = sigma.upper_bound() * sigma.upper_bound();
    std::vector<double> means;
    for (std::size_t r = 0; r < cfg.resolutions.size(); ++r) {
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& s : results) {
            const double v = std::pow(s.sup_error[r], cfg.p);
            sum += v;
            sum_sq += v * v;
        }
        const double mean_pow = sum / M;
        const double var = std::max(0.0, (sum_sq - M * mean_pow * mean_pow) / (M - 1.0));
        const double se_pow = std::sqrt(var / M);
        const double mean_err = std::pow(mean_pow, 1.0 / cfg.p);
        // d/dm m^(1/p) = (1/p) m^(1/p - 1)
        const double se = mean_pow > 0.0 ? se_pow * mean_err / (cfg.p * mean_pow) : 0.0;
        rep.per_resolution.push_back({cfg.resolutions[r], mean_err, se});
        means.push_back(mean_err);
    }
    const auto fit = fit_order(cfg.resolutions, means);
    rep.fitted_order = fit.order;
    rep.fit_stderr = fit.standard_error;
    rep.fit_points = fit.points;

    rep.sample_errors.reserve(results.size());
    for (const auto& s : results) {
        rep.sample_errors.push_back(s.sup_error);
        for (const auto& d : s.time_change) {
            ++rep.time_change_checks;
            const double bound = c2sq * d.phi_sup;
            if (d.tau_sup > bound + kTimeChangeSlack) ++rep.time_change_violations;
            if (bound > 0.0) rep.time_change_worst_ratio =
                std::max(rep.time_change_worst_ratio, d.tau_sup / bound);
        }
    }
    return rep;
}

struct SchemeComparison {
    RateReport time_change;
    RateReport euler_maruyama;
};

/// Both schemes' self-convergence on the same config. Refused for declared
/// beta < 1/2: no strong solution need exist, so the Euler-Maruyama
/// self-convergence would not measure convergence to anything.
inline SchemeComparison compare_schemes(const ExperimentConfig& cfg,
                                        unsigned jobs = default_jobs()) {
    validate(cfg);
    const DiffusionCoefficient sigma = make_coefficient(cfg);
    if (sigma.holder_beta() < 0.5)
        throw ConfigError("coefficient",
                          "scheme comparison needs a declared Hoelder exponent >= 1/2 (got " +
                              format_double(sigma.holder_beta()) +
                              "); below 1/2 a strong solution may not exist and Euler-Maruyama "
                              "has no known strong convergence");
    ExperimentConfig tc = cfg;
    tc.scheme = Scheme::TimeChange;
    ExperimentConfig em = cfg;
    em.scheme = Scheme::EulerMaruyama;
    return {run_experiment(tc, jobs), run_experiment(em, jobs)};
}

}  // namespace tcbm
