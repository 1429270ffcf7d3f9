#pragma once

// Experiment configuration files and report serialization.
//
// Config files are flat `key = value` lines; `#` starts a comment, list
// values are comma separated. Reports are written as JSON (full) and CSV
// (per-resolution table).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcbm/errors.hpp"
#include "tcbm/experiment.hpp"
#include "tcbm/format.hpp"

namespace tcbm {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    text = trim(text);
    T v{};
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty())
        throw ConfigError(std::string(key), "cannot parse '" + std::string(text) + "' as a number");
    return v;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
    std::vector<T> out;
    std::size_t start = 0;
    if (trim(text).empty()) return out;
    while (true) {
        const auto comma = text.find(',', start);
        out.push_back(parse_number<T>(key, text.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ", ";
        if constexpr (std::is_floating_point_v<T>) s += format_double(xs[i]);
        else s += std::to_string(xs[i]);
    }
    return s;
}

inline Scheme parse_scheme(std::string_view v) {
    if (v == "time-change") return Scheme::TimeChange;
    if (v == "euler-maruyama") return Scheme::EulerMaruyama;
    throw ConfigError("scheme", "expected 'time-change' or 'euler-maruyama', got '" +
                                    std::string(v) + "'");
}

inline bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError(std::string(key), "expected true or false, got '" + std::string(v) + "'");
}

inline nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace detail

/// Parses config text. Required keys: coefficient, params, T, resolutions,
/// ref_resolution, samples, master_seed. Optional: x0 (0), p (2),
/// scheme (time-change), compare (false). Does not validate ranges; call
/// validate() for that.
inline ExperimentConfig parse_config(std::string_view text) {
    std::map<std::string, std::string, std::less<>> kv;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        const std::string key(detail::trim(line.substr(0, eq)));
        if (kv.contains(key)) throw ConfigError(key, "given more than once");
        kv.emplace(key, std::string(detail::trim(line.substr(eq + 1))));
    }

    static const std::vector<std::string> known{"coefficient", "params",  "T",
                                                "x0",          "resolutions", "ref_resolution",
                                                "p",           "samples", "master_seed",
                                                "scheme",      "compare"};
    for (const auto& [k, v] : kv)
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ConfigError(k, "unknown key");
    for (const char* k : {"coefficient", "params", "T", "resolutions", "ref_resolution", "samples",
                          "master_seed"})
        if (!kv.contains(k)) throw ConfigError(k, "missing required key");

    ExperimentConfig cfg;
    cfg.coefficient = kv.at("coefficient");
    cfg.params = detail::parse_list<double>("params", kv.at("params"));
    cfg.T = detail::parse_number<double>("T", kv.at("T"));
    cfg.resolutions = detail::parse_list<std::int64_t>("resolutions", kv.at("resolutions"));
    cfg.ref_resolution = detail::parse_number<std::int64_t>("ref_resolution", kv.at("ref_resolution"));
    cfg.samples = detail::parse_number<std::int64_t>("samples", kv.at("samples"));
    cfg.master_seed = detail::parse_number<std::uint64_t>("master_seed", kv.at("master_seed"));
    if (auto it = kv.find("x0"); it != kv.end()) cfg.x0 = detail::parse_number<double>("x0", it->second);
    else cfg.x0 = 0.0;
    if (auto it = kv.find("p"); it != kv.end()) cfg.p = detail::parse_number<double>("p", it->second);
    else cfg.p = 2.0;
    cfg.scheme = Scheme::TimeChange;
    if (auto it = kv.find("scheme"); it != kv.end()) cfg.scheme = detail::parse_scheme(it->second);
    cfg.compare = false;
    if (auto it = kv.find("compare"); it != kv.end())
        cfg.compare = detail::parse_bool("compare", it->second);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline std::string format_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "coefficient = " << cfg.coefficient << '\n'
       << "params = " << detail::join(cfg.params) << '\n'
       << "T = " << format_double(cfg.T) << '\n'
       << "x0 = " << format_double(cfg.x0) << '\n'
       << "resolutions = " << detail::join(cfg.resolutions) << '\n'
       << "ref_resolution = " << cfg.ref_resolution << '\n'
       << "p = " << format_double(cfg.p) << '\n'
       << "samples = " << cfg.samples << '\n'
       << "master_seed = " << cfg.master_seed << '\n'
       << "scheme = " << to_string(cfg.scheme) << '\n'
       << "compare = " << (cfg.compare ? "true" : "false") << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["coefficient"] = cfg.coefficient;
    j["params"] = cfg.params;
    j["T"] = cfg.T;
    j["x0"] = cfg.x0;
    j["resolutions"] = cfg.resolutions;
    j["ref_resolution"] = cfg.ref_resolution;
    j["p"] = cfg.p;
    j["samples"] = cfg.samples;
    j["master_seed"] = cfg.master_seed;
    j["scheme"] = to_string(cfg.scheme);
    j["compare"] = cfg.compare;
    return j;
}

template <typename Json>
ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig cfg;
    try {
        cfg.coefficient = j.at("coefficient").template get<std::string>();
        cfg.params = j.at("params").template get<std::vector<double>>();
        cfg.T = j.at("T").template get<double>();
        cfg.x0 = j.at("x0").template get<double>();
        cfg.resolutions = j.at("resolutions").template get<std::vector<std::int64_t>>();
        cfg.ref_resolution = j.at("ref_resolution").template get<std::int64_t>();
        cfg.p = j.at("p").template get<double>();
        cfg.samples = j.at("samples").template get<std::int64_t>();
        cfg.master_seed = j.at("master_seed").template get<std::uint64_t>();
        cfg.scheme = detail::parse_scheme(j.at("scheme").template get<std::string>());
        cfg.compare = j.at("compare").template get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config", e.what());
    }
    return cfg;
}

inline nlohmann::ordered_json report_to_json(const RateReport& rep) {
    nlohmann::ordered_json j;
    j["tool"] = "tcbm";
    j["version"] = rep.version;
    j["scheme"] = to_string(rep.config.scheme);
    j["coefficient_label"] = rep.coefficient_label;
    j["config"] = config_to_json(rep.config);
    auto& rows = j["per_resolution"] = nlohmann::ordered_json::array();
    for (const auto& r : rep.per_resolution)
        rows.push_back({{"n", r.n},
                        {"mean_error", r.mean_error},
                        {"stderr", detail::number_or_null(r.standard_error)}});
    j["fitted_order"] = detail::number_or_null(rep.fitted_order);
    j["fit_stderr"] = detail::number_or_null(rep.fit_stderr);
    j["fit_points"] = rep.fit_points;
    j["theoretical_orders"] = {
        {"alpha", rep.theory.alpha},
        {"holder", detail::number_or_null(rep.theory.holder)},
        {"smooth", detail::number_or_null(rep.theory.smooth)},
        {"euler_maruyama", detail::number_or_null(rep.theory.euler_maruyama)}};
    if (rep.config.scheme == Scheme::TimeChange)
        j["time_change_check"] = {{"checks", rep.time_change_checks},
                                  {"violations", rep.time_change_violations},
                                  {"worst_ratio", rep.time_change_worst_ratio}};
    j["reference"] = "self-coupled: errors are measured against the same scheme at ref_resolution";
    return j;
}

inline nlohmann::ordered_json report_to_json(const SchemeComparison& c) {
    nlohmann::ordered_json j;
    j["tool"] = "tcbm";
    j["version"] = c.time_change.version;
    j["time_change"] = report_to_json(c.time_change);
    j["euler_maruyama"] = report_to_json(c.euler_maruyama);
    return j;
}

inline void write_report_csv(std::ostream& os, const RateReport& rep) {
    os << "n,mean_error,stderr\n";
    for (const auto& r : rep.per_resolution)
        os << r.n << ',' << format_double(r.mean_error) << ',' << format_double(r.standard_error)
           << '\n';
}

inline void write_report_csv(std::ostream& os, const SchemeComparison& c) {
    os << "scheme,n,mean_error,stderr\n";
    for (const RateReport* rep : {&c.time_change, &c.euler_maruyama})
        for (const auto& r : rep->per_resolution)
            os << to_string(rep->config.scheme) << ',' << r.n << ','
               << format_double(r.mean_error) << ',' << format_double(r.standard_error) << '\n';
}

}  // namespace tcbm
