#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "oracles/dense_sup.hpp"
#include "tcbm/cli.hpp"
#include "tcbm/config.hpp"
#include "tcbm/experiment.hpp"
#include "tcbm/timechange.hpp"

namespace {

using namespace tcbm;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct CorpusEntry {
    const char* name;
    std::vector<double> params;
};

const std::vector<CorpusEntry> kCorpus{
    {"constant", {2.0}},
    {"smooth-sin", {2.0, 1.0}},
    {"time-smooth", {2.0, 1.0}},
    {"holder-root", {1.0, 1.0, 0.5, 0.0}},
    {"holder-root", {1.0, 1.0, 0.3, 0.0}},
    {"step-mollified", {1.0, 3.0, 0.0, 0.2}},
};

ExperimentConfig rate_config(const char* name, std::vector<double> params, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.coefficient = name;
    cfg.params = std::move(params);
    cfg.T = 1.0;
    cfg.x0 = 0.0;
    cfg.resolutions = {16, 32, 64, 128, 256, 512, 1024};
    cfg.ref_resolution = 16384;
    cfg.p = 2.0;
    cfg.samples = 1000;
    cfg.master_seed = seed;
    return cfg;
}

std::string errors_text(const RateReport& rep) {
    std::string s;
    for (const auto& r : rep.per_resolution) {
        if (!s.empty()) s += ' ';
        s += std::to_string(r.n) + ":" + format_double(r.mean_error);
    }
    return s;
}

bool strictly_decreasing(const RateReport& rep) {
    for (std::size_t i = 1; i < rep.per_resolution.size(); ++i)
        if (!(rep.per_resolution[i].mean_error < rep.per_resolution[i - 1].mean_error)) return false;
    return true;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double ulp_distance(double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::abs(std::nextafter(a, b) - a);
}

Outcome exact_inverse() {
    const auto start = std::chrono::steady_clock::now();
    double worst_rel = 0.0;
    double worst_ulp = 0.0;
    std::size_t checks = 0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto& c = kCorpus[i % kCorpus.size()];
        const auto sigma = builtin_coefficient(c.name, c.params);
        const std::int64_t n = std::int64_t{16} << (i % 5);
        const double T = 1.0;
        const auto sp = make_sample_path(
            generate_path(n, provision_horizon(sigma.upper_bound(), T, n), 0.0, 1000 + i, i), sigma,
            T);
        const auto& tc = sp.time_change();
        for (std::size_t k = 0; k <= tc.last_knot(); ++k) {
            worst_ulp = std::max(worst_ulp, ulp_distance(invert(tc, tc.knots()[k]), tc.brownian_time(k)));
            worst_ulp = std::max(worst_ulp, ulp_distance(tc.at(tc.brownian_time(k)), tc.knots()[k]));
            ++checks;
        }
        GaussianStream u(77, i);
        for (std::uint64_t j = 0; j < 1000; ++j) {
            const double t = u.uniform(j) * tc.end_sde_time();
            const double back = tc.at(invert(tc, t));
            worst_rel = std::max(worst_rel, std::abs(back - t) / t);
            ++checks;
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Outcome o;
    o.pass = worst_rel <= 1e-12 && worst_ulp <= 1.0 && secs < 10.0;
    o.detail = std::to_string(checks) + " checks, worst relative " + format_double(worst_rel) +
               ", worst knot ulps " + format_double(worst_ulp) + ", " + format_double(secs) + " s";
    return o;
}

Outcome constant_sigma() {
    const auto start = std::chrono::steady_clock::now();
    const auto sigma = builtin_coefficient("constant", {2.0});
    const std::vector<std::int64_t> ladder{4, 8, 16, 32, 64, 128, 256};
    std::size_t knot_mismatches = 0;
    std::vector<std::vector<double>> errors(ladder.size());
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ExperimentConfig cfg;
        cfg.coefficient = "constant";
        cfg.params = {2.0};
        cfg.T = 1.0;
        cfg.resolutions = ladder;
        cfg.ref_resolution = 1024;
        cfg.samples = 1;
        cfg.master_seed = seed;
        const auto res = strong_error_one_sample(cfg, sigma, 0);
        for (std::size_t r = 0; r < ladder.size(); ++r) errors[r].push_back(res.sup_error[r]);

        const SamplePath ref = reference_sample_path(cfg, sigma, 0);
        for (std::int64_t n : ladder) {
            const SamplePath sp = make_sample_path(subsample(ref.brownian(), 1024 / n), sigma, cfg.T);
            const auto& xi = sp.brownian().values();
            for (std::int64_t k = 0; k <= 4 * n; ++k) {
                const double t = static_cast<double>(k) / static_cast<double>(4 * n);
                if (evaluate_solution(sp, t) != xi[static_cast<std::size_t>(k)]) ++knot_mismatches;
            }
        }
    }
    std::vector<double> medians;
    for (auto& e : errors) {
        std::nth_element(e.begin(), e.begin() + e.size() / 2, e.end());
        const double hi = e[e.size() / 2];
        const double lo = *std::max_element(e.begin(), e.begin() + e.size() / 2);
        medians.push_back(0.5 * (lo + hi));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < medians.size(); ++i) decreasing = decreasing && medians[i] < medians[i - 1];
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Outcome o;
    o.pass = knot_mismatches == 0 && decreasing && secs < 30.0;
    o.detail = std::to_string(knot_mismatches) + " knot mismatches, medians";
    for (std::size_t i = 0; i < ladder.size(); ++i)
        o.detail += " " + std::to_string(ladder[i]) + ":" + format_double(medians[i]);
    o.detail += ", " + format_double(secs) + " s";
    return o;
}

Outcome breakpoint_oracle() {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::size_t n_checked = 0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const auto& c = kCorpus[1 + i % (kCorpus.size() - 1)];
        ExperimentConfig cfg;
        cfg.coefficient = c.name;
        cfg.params = c.params;
        cfg.T = 1.0;
        cfg.resolutions = {16, 32, 64, 128};
        cfg.ref_resolution = 1024;
        cfg.samples = 50;
        cfg.master_seed = 31337;
        const auto sigma = make_coefficient(cfg);
        const std::int64_t n = cfg.resolutions[i % cfg.resolutions.size()];
        const SamplePath ref = reference_sample_path(cfg, sigma, i);
        const SamplePath coarse =
            make_sample_path(subsample(ref.brownian(), cfg.ref_resolution / n), sigma, cfg.T);
        const double bp = sup_abs_difference(coarse, ref);
        const double dense = oracle::dense_sup(
            [&](double t) { return evaluate_solution(coarse, t) - evaluate_solution(ref, t); }, cfg.T);
        worst = std::max(worst, std::abs(bp - dense));
        ++n_checked;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Outcome o;
    o.pass = worst <= 1e-10 && secs < 60.0;
    o.detail = std::to_string(n_checked) + " samples, worst |breakpoint - dense| " +
               format_double(worst) + ", " + format_double(secs) + " s";
    return o;
}

void print(int id, const std::string& name, const Outcome& o, int& failures) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << "  " << name << ": " << o.detail
              << std::endl;
    if (!o.pass) ++failures;
}

Outcome guarded(const std::function<Outcome()>& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        return {false, std::string("exception: ") + e.what()};
    }
}

}  // namespace

int main() {
    int failures = 0;

    print(1, "exact inverse", guarded(exact_inverse), failures);
    print(2, "constant sigma", guarded(constant_sigma), failures);

    const fs::path work =
        fs::temp_directory_path() / ("tcbm-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(work);
    const auto smooth_cfg = rate_config("smooth-sin", {2.0, 1.0}, 20240601);
    {
        std::ofstream(work / "smooth.cfg") << format_config(smooth_cfg);
    }

    std::size_t inequality_checks = 0, inequality_violations = 0;
    double inequality_worst = 0.0;
    bool inequality_ok = false;
    auto tally = [&](std::size_t checks, std::size_t violations, double worst) {
        inequality_checks += checks;
        inequality_violations += violations;
        inequality_worst = std::max(inequality_worst, worst);
    };

    std::string report_jobs1;
    print(3, "smooth rate", guarded([&] {
              std::ostringstream out, err;
              cli::RunOptions opt;
              opt.config_path = (work / "smooth.cfg").string();
              opt.out_dir = (work / "jobs1").string();
              opt.jobs = 1;
              if (cli::cmd_run(opt, out, err) != cli::kOk) return Outcome{false, err.str()};
              report_jobs1 = slurp(work / "jobs1" / "report.json");
              const auto j = nlohmann::json::parse(report_jobs1);
              const double order = j.at("fitted_order").get<double>();
              const auto& tcc = j.at("time_change_check");
              tally(tcc.at("checks").get<std::size_t>(), tcc.at("violations").get<std::size_t>(),
                    tcc.at("worst_ratio").get<double>());
              std::string errs;
              for (const auto& r : j.at("per_resolution"))
                  errs += " " + std::to_string(r.at("n").get<std::int64_t>()) + ":" +
                          format_double(r.at("mean_error").get<double>());
              return Outcome{order >= 0.40 && order <= 0.65,
                             "fitted order " + format_double(order) + " (want [0.40, 0.65]), errors" +
                                 errs};
          }),
          failures);

    for (const auto& [beta, floor, seed] :
         {std::tuple{0.5, 0.10, std::uint64_t{20240602}}, std::tuple{0.3, 0.02, std::uint64_t{20240603}}}) {
        const std::string name = "holder rate beta=" + format_double(beta);
        print(4, name, guarded([&, beta = beta, floor = floor, seed = seed] {
                  const auto cfg = rate_config("holder-root", {1.0, 1.0, beta, 0.0}, seed);
                  const auto rep = run_experiment(cfg, default_jobs());
                  tally(rep.time_change_checks, rep.time_change_violations,
                        rep.time_change_worst_ratio);
                  const bool dec = strictly_decreasing(rep);
                  return Outcome{dec && rep.fitted_order > floor,
                                 "fitted order " + format_double(rep.fitted_order) + " (want > " +
                                     format_double(floor) + "), errors " + errors_text(rep) +
                                     (dec ? "" : " NOT strictly decreasing")};
              }),
              failures);
    }

    inequality_ok = inequality_checks > 0 && inequality_violations == 0;
    print(5, "time-change inequality",
          Outcome{inequality_ok, std::to_string(inequality_violations) + " violations in " +
                                std::to_string(inequality_checks) + " checks, worst tau/bound ratio " +
                                format_double(inequality_worst)},
          failures);

    print(6, "breakpoint sup vs dense oracle", guarded(breakpoint_oracle), failures);

    print(7, "determinism across jobs", guarded([&] {
              std::ostringstream out, err;
              cli::RunOptions opt;
              opt.config_path = (work / "smooth.cfg").string();
              opt.out_dir = (work / "jobs8").string();
              opt.jobs = 8;
              if (cli::cmd_run(opt, out, err) != cli::kOk) return Outcome{false, err.str()};
              const std::string report_jobs8 = slurp(work / "jobs8" / "report.json");
              const bool same = !report_jobs1.empty() && report_jobs1 == report_jobs8;
              return Outcome{same, same ? "report.json identical for --jobs 1 and --jobs 8 (" +
                                              std::to_string(report_jobs8.size()) + " bytes)"
                                        : "report.json differs between --jobs 1 and --jobs 8"};
          }),
          failures);

    print(8, "euler-maruyama comparison", guarded([&] {
              auto cfg = rate_config("holder-root", {1.0, 1.0, 0.6, 0.0}, 20240604);
              cfg.compare = true;
              const auto cmp = compare_schemes(cfg, default_jobs());
              const double tc = cmp.time_change.fitted_order;
              const double em = cmp.euler_maruyama.fitted_order;
              const bool both = std::isfinite(tc) && std::isfinite(em);
              return Outcome{both && tc > 0.1,
                             "time-change order " + format_double(tc) + " (want > 0.1), " +
                                 "euler-maruyama order " + format_double(em) +
                                 " (theory " + format_double(cmp.euler_maruyama.theory.euler_maruyama) + ")"};
          }),
          failures);

    std::error_code ec;
    fs::remove_all(work, ec);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
