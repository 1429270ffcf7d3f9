#pragma once

// Implementation of the `tcbm` command-line subcommands.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcbm/baseline.hpp"
#include "tcbm/config.hpp"
#include "tcbm/errors.hpp"
#include "tcbm/experiment.hpp"
#include "tcbm/timechange.hpp"

namespace tcbm::cli {

enum ExitCode : int {
    kOk = 0,
    kRuntimeError = 1,
    kConfigError = 2,
    kContractBreach = 3,
};

struct RunOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> samples;
    std::optional<std::vector<std::int64_t>> resolutions;
    std::string out_dir = ".";
    bool force = false;
    unsigned jobs = default_jobs();
};

struct DumpOptions {
    std::string config_path;
    std::int64_t sample = 0;
    std::int64_t n = 0;
    std::string out_dir = ".";
    bool force = false;
    bool brownian = false;  ///< also write the driving Brownian knots
};

namespace detail {

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Creates the output directory and refuses to clobber existing outputs.
inline void prepare_outputs(const std::filesystem::path& dir,
                            const std::vector<std::filesystem::path>& files, bool force) {
    std::filesystem::create_directories(dir);
    if (force) return;
    for (const auto& f : files)
        if (std::filesystem::exists(f))
            throw ConfigError("out", "'" + f.string() + "' exists; pass --force to overwrite");
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& write) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    write(os);
    if (!os) throw std::runtime_error("error while writing '" + path.string() + "'");
}

inline std::string order_text(double v) {
    return std::isfinite(v) ? format_double(v) : std::string("n/a");
}

inline void print_summary(std::ostream& out, const RateReport& rep) {
    out << to_string(rep.config.scheme) << " on " << rep.coefficient_label << '\n';
    for (const auto& r : rep.per_resolution)
        out << "  n = " << r.n << "  error = " << format_double(r.mean_error)
            << "  stderr = " << format_double(r.standard_error) << '\n';
    out << "  fitted order: " << order_text(rep.fitted_order)
        << " (stderr " << order_text(rep.fit_stderr) << ")\n";
    out << "  theoretical overlay (alpha = " << format_double(rep.theory.alpha)
        << "): holder " << order_text(rep.theory.holder) << ", smooth "
        << order_text(rep.theory.smooth) << ", euler-maruyama "
        << order_text(rep.theory.euler_maruyama) << '\n';
    if (rep.config.scheme == Scheme::TimeChange)
        out << "  time-change bound violations: " << rep.time_change_violations << " / "
            << rep.time_change_checks << '\n';
}

/// Runs `body`, mapping exceptions to exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error in field '" << e.field() << "': " << e.what() << '\n';
        return kConfigError;
    } catch (const ContractBreach& e) {
        err << "contract breach in module '" << e.module() << "'";
        if (e.sample_index()) err << " at sample " << *e.sample_index();
        err << ": " << e.what() << '\n';
        return kContractBreach;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

}  // namespace detail

inline int cmd_run(const RunOptions& opt, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        ExperimentConfig cfg = load_config(opt.config_path);
        if (opt.seed) cfg.master_seed = *opt.seed;
        if (opt.samples) cfg.samples = *opt.samples;
        if (opt.resolutions) cfg.resolutions = *opt.resolutions;
        validate(cfg);

        const std::filesystem::path dir(opt.out_dir);
        const auto json_path = dir / "report.json";
        const auto csv_path = dir / "report.csv";
        const auto manifest_path = dir / "manifest.json";
        detail::prepare_outputs(dir, {json_path, csv_path, manifest_path}, opt.force);

        nlohmann::ordered_json report;
        if (cfg.compare) {
            const auto cmp = compare_schemes(cfg, opt.jobs);
            report = report_to_json(cmp);
            detail::write_file(csv_path, [&](std::ostream& os) { write_report_csv(os, cmp); });
            detail::print_summary(out, cmp.time_change);
            detail::print_summary(out, cmp.euler_maruyama);
        } else {
            const auto rep = run_experiment(cfg, opt.jobs);
            report = report_to_json(rep);
            detail::write_file(csv_path, [&](std::ostream& os) { write_report_csv(os, rep); });
            detail::print_summary(out, rep);
        }
        detail::write_file(json_path, [&](std::ostream& os) { os << report.dump(2) << '\n'; });

        nlohmann::ordered_json manifest;
        manifest["config_path"] = opt.config_path;
        manifest["output_directory"] = opt.out_dir;
        manifest["overrides"] = {
            {"seed", opt.seed ? nlohmann::ordered_json(*opt.seed) : nlohmann::ordered_json()},
            {"samples", opt.samples ? nlohmann::ordered_json(*opt.samples) : nlohmann::ordered_json()},
            {"resolutions",
             opt.resolutions ? nlohmann::ordered_json(*opt.resolutions) : nlohmann::ordered_json()}};
        manifest["jobs"] = opt.jobs;
        manifest["timestamp"] = detail::utc_timestamp();
        manifest["version"] = version_string();
        detail::write_file(manifest_path, [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });

        out << "wrote " << json_path.string() << " and " << csv_path.string() << '\n';
        return static_cast<int>(kOk);
    });
}

inline int cmd_dump_path(const DumpOptions& opt, std::ostream& out = std::cout,
                         std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        const ExperimentConfig cfg = load_config(opt.config_path);
        validate_structure(cfg);
        if (opt.sample < 0 || opt.sample >= cfg.samples)
            throw ConfigError("sample", "index " + std::to_string(opt.sample) + " outside [0, " +
                                            std::to_string(cfg.samples) + ")");
        const bool on_ladder = std::find(cfg.resolutions.begin(), cfg.resolutions.end(), opt.n) !=
                               cfg.resolutions.end();
        if (!on_ladder && opt.n != cfg.ref_resolution)
            throw ConfigError("n", std::to_string(opt.n) +
                                       " is neither in resolutions nor the ref_resolution");

        const std::filesystem::path dir(opt.out_dir);
        const std::string suffix = std::to_string(opt.sample) + "-" + std::to_string(opt.n) + ".csv";
        const auto path_csv = dir / ("path-" + suffix);
        const auto brownian_csv = dir / ("brownian-" + suffix);
        std::vector<std::filesystem::path> outputs{path_csv};
        if (opt.brownian) outputs.push_back(brownian_csv);
        detail::prepare_outputs(dir, outputs, opt.force);

        const DiffusionCoefficient sigma = make_coefficient(cfg);
        const auto index = static_cast<std::uint64_t>(opt.sample);
        const std::int64_t factor = cfg.ref_resolution / opt.n;
        try {
            if (cfg.scheme == Scheme::TimeChange) {
                const SamplePath ref = reference_sample_path(cfg, sigma, index);
                const SamplePath sp = factor == 1 ? ref
                                                  : make_sample_path(subsample(ref.brownian(), factor),
                                                                     sigma, cfg.T);
                detail::write_file(path_csv, [&](std::ostream& os) { write_csv(os, sp); });
                if (opt.brownian)
                    detail::write_file(brownian_csv,
                                       [&](std::ostream& os) { write_csv(os, sp.brownian()); });
            } else {
                const BrownianPath driver = subsample(em_driver(cfg, index), factor);
                const EmPath em = em_simulate(sigma, driver, cfg.T, cfg.x0);
                detail::write_file(path_csv, [&](std::ostream& os) { write_csv(os, em); });
                if (opt.brownian)
                    detail::write_file(brownian_csv,
                                       [&](std::ostream& os) { write_csv(os, driver); });
            }
        } catch (ContractBreach& e) {
            e.set_sample_index(index);
            throw;
        }
        out << "wrote " << path_csv.string() << '\n';
        return static_cast<int>(kOk);
    });
}

}  // namespace tcbm::cli
