/*
 * Experiment harness: configuration schema, Monte-Carlo sweeps, spectra
 * Copyright (c) 2026 The gridless-doa authors
 * SPDX-License-Identifier: MIT
 *
 * An experiment is described by a JSON config: an array geometry, a
 * source scene, a source model, one (SNR, snapshot-count) operating
 * point — of which exactly one may be a list, forming the sweep axis —
 * and a list of estimation methods with per-method options. The runner
 * simulates one snapshot matrix per trial (seed = base_seed + trial
 * index), hands the same data to every method, scores frequency
 * estimates by assignment MSE against the scene, and aggregates per
 * sweep point.
 *
 * Determinism contract: with a fixed config and seed the per-trial
 * results and the aggregate table are byte-identical across runs and
 * across thread counts. Trials may execute concurrently; results are
 * gathered and written in (sweep-point, trial-index) order regardless
 * of completion order. Wall-clock timings are the one quantity that
 * cannot be deterministic, so they live in a separate timing table.
 */

#ifndef GRIDLESS_EXPERIMENT_HPP
#define GRIDLESS_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "gridless/array.hpp"
#include "gridless/baselines.hpp"
#include "gridless/errors.hpp"
#include "gridless/io.hpp"
#include "gridless/metrics.hpp"
#include "gridless/simulate.hpp"
#include "gridless/spa.hpp"

namespace gridless {

/// Which quantity a Monte-Carlo sweep walks.
enum class SweepAxis { none, snr, snapshots };

/// One estimation method plus its options, as named in a config.
struct MethodSpec {
    std::string name;  ///< spa | spice | spice-pp | music | iaa
    std::string label; ///< row label in result tables and file names
    NoiseMode mode = NoiseMode::distinct;
    int grid = 500; ///< grid size for the gridded methods
    int k = 0;      ///< source count: required by music, optional peak count elsewhere
};

struct ExperimentConfig {
    ArrayGeometry geometry = ArrayGeometry::ula(1);
    SourceScene scene;
    std::vector<double> snr_db = {0.0};
    std::vector<int> snapshots = {1};
    SweepAxis axis = SweepAxis::none;
    bool true_covariance = false; ///< feed the exact covariance instead of data
    int n_trials = 50;
    std::uint64_t base_seed = 1;
    std::string output_dir = ".";
    std::vector<MethodSpec> methods;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                           const std::string& where)
{
    const auto it = obj.find(key);
    if (it == obj.end())
        throw ConfigError("config: missing field '" + where + key + "'");
    return *it;
}

inline void check_keys(const nlohmann::json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed)
{
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (item.key() == a)
                known = true;
        if (!known)
            throw ConfigError("config: unknown field '" + where + item.key() + "'");
    }
}

inline double as_number(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_number())
        throw ConfigError("config: field '" + where + "' must be a number");
    return j.get<double>();
}

inline int as_int(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_number_integer())
        throw ConfigError("config: field '" + where + "' must be an integer");
    return j.get<int>();
}

inline std::string default_label(const MethodSpec& m)
{
    const bool plus = m.mode == NoiseMode::equal;
    if (m.name == "spa")
        return plus ? "spa+" : "spa";
    if (m.name == "spice")
        return plus ? "spice+" : "spice";
    if (m.name == "spice-pp")
        return plus ? "spice+-pp" : "spice-pp";
    return m.name; // music, iaa: no noise-model variants
}

inline MethodSpec parse_method(const nlohmann::json& j, int index)
{
    const std::string where = "methods[" + std::to_string(index) + "].";
    if (!j.is_object())
        throw ConfigError("config: field 'methods[" + std::to_string(index) +
                          "]' must be an object");
    check_keys(j, where, {"name", "label", "mode", "grid", "k"});
    MethodSpec m;
    const nlohmann::json& name = require_field(j, "name", where);
    if (!name.is_string())
        throw ConfigError("config: field '" + where + "name' must be a string");
    m.name = name.get<std::string>();
    const bool fits = m.name == "spa" || m.name == "spice" || m.name == "spice-pp";
    const bool gridded = m.name == "spice" || m.name == "spice-pp" || m.name == "music" ||
                         m.name == "iaa";
    if (!fits && !gridded)
        throw ConfigError("config: field '" + where + "name' is '" + m.name +
                          "', expected one of spa, spice, spice-pp, music, iaa");
    if (const auto it = j.find("mode"); it != j.end()) {
        if (!fits)
            throw ConfigError("config: field '" + where + "mode' is not used by " + m.name);
        const std::string mode = it->is_string() ? it->get<std::string>() : std::string();
        if (mode == "equal")
            m.mode = NoiseMode::equal;
        else if (mode == "distinct")
            m.mode = NoiseMode::distinct;
        else
            throw ConfigError("config: field '" + where +
                              "mode' must be \"equal\" or \"distinct\"");
    }
    if (const auto it = j.find("grid"); it != j.end()) {
        if (!gridded)
            throw ConfigError("config: field '" + where + "grid' is not used by " + m.name);
        m.grid = as_int(*it, where + "grid");
        if (m.grid < 2)
            throw ConfigError("config: field '" + where + "grid' must be >= 2");
    }
    if (const auto it = j.find("k"); it != j.end()) {
        if (m.name == "spa" || m.name == "spice-pp")
            throw ConfigError("config: field '" + where + "k' is not used by " + m.name +
                              " (it returns point estimates directly)");
        m.k = as_int(*it, where + "k");
        if (m.k < 1)
            throw ConfigError("config: field '" + where + "k' must be >= 1");
    }
    if (m.name == "music" && m.k == 0)
        throw ConfigError("config: field '" + where + "k' is required for music");
    if (const auto it = j.find("label"); it != j.end()) {
        if (!it->is_string() || it->get<std::string>().empty())
            throw ConfigError("config: field '" + where + "label' must be a non-empty string");
        m.label = it->get<std::string>();
    } else {
        m.label = default_label(m);
    }
    return m;
}

inline ArrayGeometry parse_geometry(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("config: field 'geometry' must be an object");
    const nlohmann::json& type = require_field(j, "type", "geometry.");
    if (type == "ula") {
        check_keys(j, "geometry.", {"type", "sensors"});
        const int m = as_int(require_field(j, "sensors", "geometry."), "geometry.sensors");
        if (m < 1)
            throw ConfigError("config: field 'geometry.sensors' must be >= 1");
        return ArrayGeometry::ula(m);
    }
    if (type == "sla") {
        check_keys(j, "geometry.", {"type", "positions"});
        const nlohmann::json& pos = require_field(j, "positions", "geometry.");
        if (!pos.is_array() || pos.empty())
            throw ConfigError("config: field 'geometry.positions' must be a non-empty array");
        std::vector<int> positions;
        for (std::size_t i = 0; i < pos.size(); ++i)
            positions.push_back(as_int(pos[i], "geometry.positions[" + std::to_string(i) + "]"));
        try {
            return ArrayGeometry(std::move(positions));
        } catch (const DomainError& e) {
            throw ConfigError("config: geometry.positions: " + std::string(e.what()));
        }
    }
    throw ConfigError("config: field 'geometry.type' must be \"ula\" or \"sla\"");
}

inline SourceScene parse_scene(const nlohmann::json& j, const nlohmann::json& model)
{
    if (!j.is_object())
        throw ConfigError("config: field 'scene' must be an object");
    check_keys(j, "scene.", {"thetas", "powers", "coherent_pairs"});
    SourceScene scene;
    const nlohmann::json& thetas = require_field(j, "thetas", "scene.");
    const nlohmann::json& powers = require_field(j, "powers", "scene.");
    if (!thetas.is_array() || !powers.is_array())
        throw ConfigError("config: fields 'scene.thetas' and 'scene.powers' must be arrays");
    for (std::size_t i = 0; i < thetas.size(); ++i)
        scene.thetas.push_back(as_number(thetas[i], "scene.thetas[" + std::to_string(i) + "]"));
    for (std::size_t i = 0; i < powers.size(); ++i)
        scene.powers.push_back(as_number(powers[i], "scene.powers[" + std::to_string(i) + "]"));
    if (const auto it = j.find("coherent_pairs"); it != j.end()) {
        if (!it->is_array())
            throw ConfigError("config: field 'scene.coherent_pairs' must be an array of "
                              "[replica, base] index pairs (0-based)");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const nlohmann::json& pair = (*it)[i];
            const std::string where = "scene.coherent_pairs[" + std::to_string(i) + "]";
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigError("config: field '" + where +
                                  "' must be a [replica, base] index pair (0-based)");
            scene.coherence.emplace_back(as_int(pair[0], where + "[0]"),
                                         as_int(pair[1], where + "[1]"));
        }
    }
    if (!model.is_string())
        throw ConfigError("config: field 'source_model' must be a string");
    const std::string name = model.get<std::string>();
    if (name == "gaussian")
        scene.model = SourceModel::gaussian;
    else if (name == "constant_modulus")
        scene.model = SourceModel::constant_modulus;
    else
        throw ConfigError(
            "config: field 'source_model' must be \"gaussian\" or \"constant_modulus\"");
    try {
        scene.validate();
    } catch (const DomainError& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
    return scene;
}

} // namespace detail

/// Build a validated config from parsed JSON. Every schema violation is
/// reported as a ConfigError naming the offending field.
inline ExperimentConfig parse_config(const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("config: top level must be a JSON object");
    detail::check_keys(j, "",
                       {"geometry", "scene", "source_model", "snr_db", "snapshots",
                        "true_covariance", "n_trials", "base_seed", "output_dir", "methods"});
    ExperimentConfig cfg;
    cfg.geometry = detail::parse_geometry(detail::require_field(j, "geometry", ""));
    cfg.scene = detail::parse_scene(detail::require_field(j, "scene", ""),
                                    detail::require_field(j, "source_model", ""));

    const nlohmann::json& snr = detail::require_field(j, "snr_db", "");
    const nlohmann::json& snaps = detail::require_field(j, "snapshots", "");
    cfg.snr_db.clear();
    cfg.snapshots.clear();
    if (snr.is_array()) {
        if (snr.empty())
            throw ConfigError("config: field 'snr_db' must not be an empty list");
        for (std::size_t i = 0; i < snr.size(); ++i)
            cfg.snr_db.push_back(detail::as_number(snr[i], "snr_db[" + std::to_string(i) + "]"));
        cfg.axis = SweepAxis::snr;
    } else {
        cfg.snr_db.push_back(detail::as_number(snr, "snr_db"));
    }
    if (snaps.is_array()) {
        if (cfg.axis == SweepAxis::snr)
            throw ConfigError("config: fields 'snr_db' and 'snapshots' cannot both be lists "
                              "(exactly one sweep axis)");
        if (snaps.empty())
            throw ConfigError("config: field 'snapshots' must not be an empty list");
        for (std::size_t i = 0; i < snaps.size(); ++i)
            cfg.snapshots.push_back(
                detail::as_int(snaps[i], "snapshots[" + std::to_string(i) + "]"));
        cfg.axis = SweepAxis::snapshots;
    } else {
        cfg.snapshots.push_back(detail::as_int(snaps, "snapshots"));
    }
    for (int n : cfg.snapshots)
        if (n < 1)
            throw ConfigError("config: field 'snapshots' values must be >= 1");

    if (const auto it = j.find("true_covariance"); it != j.end()) {
        if (!it->is_boolean())
            throw ConfigError("config: field 'true_covariance' must be a boolean");
        cfg.true_covariance = it->get<bool>();
    }
    if (const auto it = j.find("n_trials"); it != j.end()) {
        cfg.n_trials = detail::as_int(*it, "n_trials");
        if (cfg.n_trials < 1)
            throw ConfigError("config: field 'n_trials' must be >= 1");
    }
    if (const auto it = j.find("base_seed"); it != j.end()) {
        if (!it->is_number_integer())
            throw ConfigError("config: field 'base_seed' must be a nonnegative integer");
        if (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)
            throw ConfigError("config: field 'base_seed' must be a nonnegative integer");
        cfg.base_seed = it->get<std::uint64_t>();
    }
    if (const auto it = j.find("output_dir"); it != j.end()) {
        if (!it->is_string())
            throw ConfigError("config: field 'output_dir' must be a string");
        cfg.output_dir = it->get<std::string>();
    }

    const nlohmann::json& methods = detail::require_field(j, "methods", "");
    if (!methods.is_array() || methods.empty())
        throw ConfigError("config: field 'methods' must be a non-empty array");
    for (std::size_t i = 0; i < methods.size(); ++i)
        cfg.methods.push_back(detail::parse_method(methods[i], static_cast<int>(i)));
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        for (std::size_t k = i + 1; k < cfg.methods.size(); ++k)
            if (cfg.methods[i].label == cfg.methods[k].label)
                throw ConfigError("config: methods[" + std::to_string(k) + "] duplicates label '" +
                                  cfg.methods[k].label + "'; set explicit labels");
    return cfg;
}

/// Parse config text (JSON). Malformed JSON is a ParseError; schema
/// violations are ConfigErrors.
inline ExperimentConfig parse_config_text(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("config: " + std::string(e.what()));
    }
    return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("config: cannot open '" + path + "' for reading");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

/// One (SNR, snapshot-count) operating point of a sweep.
struct SweepPoint {
    double snr_db = 0.0;
    int n = 1;
};

inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg)
{
    std::vector<SweepPoint> pts;
    if (cfg.axis == SweepAxis::snapshots)
        for (int n : cfg.snapshots)
            pts.push_back({cfg.snr_db.front(), n});
    else
        for (double s : cfg.snr_db)
            pts.push_back({s, cfg.snapshots.front()});
    return pts;
}

namespace detail {

/// Everything one trial's methods consume. The same realization is
/// shared by all methods of the trial.
struct TrialData {
    Eigen::MatrixXcd y; ///< L x N snapshots; empty in true-covariance mode
    Eigen::MatrixXcd r; ///< sample covariance, or the exact covariance
    double snr_db = 0.0;
    int n = 1;
    std::uint64_t seed = 0;
};

inline TrialData make_trial_data(const ExperimentConfig& cfg, const SweepPoint& pt,
                                 std::uint64_t seed)
{
    TrialData d;
    d.snr_db = pt.snr_db;
    d.n = pt.n;
    d.seed = seed;
    const double sigma = snr_to_sigma(cfg.scene.powers, pt.snr_db);
    if (cfg.true_covariance) {
        d.r = true_covariance(cfg.scene, cfg.geometry, NoiseSpec::equal(sigma));
    } else {
        d.y = generate_snapshots(cfg.scene, cfg.geometry, NoiseSpec::equal(sigma), pt.n, seed);
        d.r = sample_covariance(d.y);
    }
    return d;
}

/// A method's point estimate for one trial.
struct MethodRun {
    ParamEstimate estimate;
    bool converged = true;
};

inline ParamEstimate peaks_to_estimate(const Spectrum& spectrum, int k)
{
    const PeakPickResult peaks = peak_pick(spectrum, k);
    ParamEstimate est;
    est.thetas = peaks.thetas;
    est.rank = static_cast<int>(peaks.thetas.size());
    est.powers.resize(est.rank);
    for (int i = 0; i < est.rank; ++i) {
        const int idx = static_cast<int>(
            std::llround(peaks.thetas(i) * spectrum.grid.size()));
        est.powers(i) = spectrum.values(idx % spectrum.grid.size());
    }
    est.sigma = Eigen::VectorXd::Zero(0);
    return est;
}

/// Run one method on one trial's data. k_true is the scene's source
/// count, used as the peak count for dense methods without their own k.
inline MethodRun run_method_point(const MethodSpec& m, const ExperimentConfig& cfg,
                                  const TrialData& d, int k_true)
{
    MethodRun run;
    if (m.name == "spa") {
        const SpaEstimate est =
            !cfg.true_covariance && d.n == 1
                ? spa_estimate(d.y, cfg.geometry, m.mode)
                : spa_estimate_from_covariance(d.r, cfg.geometry, d.n, m.mode);
        run.estimate = est;
        run.converged = est.diagnostics.status == SdpStatus::optimal;
        return run;
    }
    if (m.name == "spice" || m.name == "spice-pp") {
        const SpiceResult fit = spice(d.r, cfg.geometry, d.n, Grid(m.grid), m.mode);
        if (m.name == "spice-pp") {
            run.estimate = spice_pp(fit, cfg.geometry);
        } else {
            run.estimate = peaks_to_estimate({Grid(m.grid), fit.p}, m.k > 0 ? m.k : k_true);
            run.estimate.sigma = fit.sigma;
        }
        run.converged = fit.converged;
        return run;
    }
    if (m.name == "music") {
        run.estimate = peaks_to_estimate(music(d.r, cfg.geometry, m.k, Grid(m.grid)), m.k);
        return run;
    }
    if (m.name == "iaa") {
        if (cfg.true_covariance)
            throw UnsupportedError("iaa: requires raw snapshots, which true-covariance mode "
                                   "does not provide");
        const IaaResult res = iaa(d.y, cfg.geometry, Grid(m.grid));
        run.estimate = peaks_to_estimate(res.spectrum, m.k > 0 ? m.k : k_true);
        run.converged = res.converged;
        return run;
    }
    throw DomainError("method '" + m.name + "' is not known");
}

/// All methods on one trial. Failures inside a method become rows with
/// converged=false and the empty-estimate score; they never abort.
inline std::vector<TrialResult> run_trial(const ExperimentConfig& cfg, const SweepPoint& pt,
                                          std::uint64_t seed)
{
    const TrialData data = make_trial_data(cfg, pt, seed);
    const Eigen::VectorXd truth = Eigen::Map<const Eigen::VectorXd>(
        cfg.scene.thetas.data(), static_cast<long>(cfg.scene.thetas.size()));
    const int k_true = cfg.scene.size();
    std::vector<TrialResult> rows;
    rows.reserve(cfg.methods.size());
    for (const MethodSpec& m : cfg.methods) {
        TrialResult row;
        row.method = m.label;
        row.seed = seed;
        row.snr_db = pt.snr_db;
        row.n_snapshots = pt.n;
        const auto start = std::chrono::steady_clock::now();
        try {
            const MethodRun run = run_method_point(m, cfg, data, k_true);
            const TopKResult top = top_k(run.estimate, k_true);
            row.mse = mse_frequency(top.thetas, truth);
            row.converged = run.converged;
        } catch (const Error&) {
            // Score as an empty estimate: every source missing at the
            // worst-case circular distance.
            row.mse = mse_frequency(Eigen::VectorXd(0), truth);
            row.converged = false;
        }
        row.runtime_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Mean per-frequency lower bound for the scene at one operating point,
/// under the given noise-model knowledge. NaN when no bound exists
/// (e.g. coherent scenes).
inline double crlb_mean(const ExperimentConfig& cfg, const SweepPoint& pt, NoiseMode mode)
{
    try {
        const double sigma = snr_to_sigma(cfg.scene.powers, pt.snr_db);
        return crlb_stochastic(cfg.scene, cfg.geometry, sigma, pt.n, mode).mean();
    } catch (const Error&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

} // namespace detail

/// Aggregate of one method at one sweep point.
struct AggregateRow {
    double snr_db = 0.0;
    int n = 1;
    std::string method;
    double mean_mse = 0.0;
    double crlb = 0.0; ///< mean per-frequency bound under the method's noise model
    int converged = 0; ///< number of converged trials
    int trials = 0;
    double mean_runtime_s = 0.0; ///< measured; excluded from the deterministic table
};

struct MonteCarloResult {
    std::vector<TrialResult> trials; ///< (sweep-point, trial, method) order
    std::vector<AggregateRow> aggregate;
};

/// Run the full sweep. Trials within a sweep point execute on up to
/// `threads` workers; the result layout is independent of scheduling.
inline MonteCarloResult run_montecarlo(const ExperimentConfig& cfg, int threads = 1)
{
    if (cfg.axis == SweepAxis::none)
        throw ConfigError("config: montecarlo needs a sweep axis "
                          "(give snr_db or snapshots as a list)");
    if (threads < 1)
        throw ConfigError("threads: must be >= 1");
    MonteCarloResult out;
    for (const SweepPoint& pt : sweep_points(cfg)) {
        std::vector<std::vector<TrialResult>> per_trial(
            static_cast<std::size_t>(cfg.n_trials));
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const auto work = [&] {
            for (int t; (t = next.fetch_add(1)) < cfg.n_trials;) {
                try {
                    per_trial[static_cast<std::size_t>(t)] =
                        detail::run_trial(cfg, pt, cfg.base_seed + static_cast<std::uint64_t>(t));
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 1; w < std::min(threads, cfg.n_trials); ++w)
            pool.emplace_back(work);
        work();
        for (std::thread& th : pool)
            th.join();
        if (failure)
            std::rethrow_exception(failure);

        for (std::size_t j = 0; j < cfg.methods.size(); ++j) {
            AggregateRow agg;
            agg.snr_db = pt.snr_db;
            agg.n = pt.n;
            agg.method = cfg.methods[j].label;
            agg.trials = cfg.n_trials;
            const std::string& name = cfg.methods[j].name;
            const NoiseMode bound_mode = (name == "music" || name == "iaa")
                                             ? NoiseMode::distinct
                                             : cfg.methods[j].mode;
            agg.crlb = detail::crlb_mean(cfg, pt, bound_mode);
            for (int t = 0; t < cfg.n_trials; ++t) {
                const TrialResult& row = per_trial[static_cast<std::size_t>(t)][j];
                agg.mean_mse += row.mse;
                agg.mean_runtime_s += row.runtime_s;
                agg.converged += row.converged ? 1 : 0;
            }
            agg.mean_mse /= cfg.n_trials;
            agg.mean_runtime_s /= cfg.n_trials;
            out.aggregate.push_back(std::move(agg));
        }
        for (auto& rows : per_trial)
            for (TrialResult& row : rows)
                out.trials.push_back(std::move(row));
    }
    return out;
}

inline void write_trials_csv(std::ostream& out, const std::vector<TrialResult>& rows)
{
    csv_row(out, {"method", "seed", "snr_db", "n", "mse", "runtime_s", "converged"});
    for (const TrialResult& r : rows)
        csv_row(out, {r.method, std::to_string(r.seed), format_g(r.snr_db),
                      std::to_string(r.n_snapshots), format_g(r.mse), format_g(r.runtime_s),
                      r.converged ? "1" : "0"});
}

/// The deterministic aggregate: everything except wall-clock timings.
inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows)
{
    csv_row(out, {"snr_db", "n", "method", "mean_mse", "crlb", "converged", "trials"});
    for (const AggregateRow& r : rows)
        csv_row(out, {format_g(r.snr_db), std::to_string(r.n), r.method, format_g(r.mean_mse),
                      format_g(r.crlb), std::to_string(r.converged), std::to_string(r.trials)});
}

inline void write_timing_csv(std::ostream& out, const std::vector<AggregateRow>& rows)
{
    csv_row(out, {"snr_db", "n", "method", "mean_runtime_s"});
    for (const AggregateRow& r : rows)
        csv_row(out, {format_g(r.snr_db), std::to_string(r.n), r.method,
                      format_g(r.mean_runtime_s)});
}

/// One method's contribution to a spectrum comparison: either a dense
/// spectrum over its grid, a set of point estimates, or a skip note.
struct SpectrumOutput {
    std::string label;
    bool skipped = false;
    std::string note;         ///< reason when skipped
    bool dense = false;       ///< dense spectrum vs discrete point estimates
    Eigen::VectorXd thetas;   ///< grid points, or estimated frequencies
    Eigen::VectorXd values;   ///< spectrum values, or estimated powers
    bool converged = true;
};

/// Spectra / point estimates of every configured method for a single
/// realization at the config's single operating point.
inline std::vector<SpectrumOutput> run_spectrum(const ExperimentConfig& cfg)
{
    if (cfg.axis != SweepAxis::none)
        throw ConfigError("config: spectrum needs a single operating point "
                          "(scalar snr_db and snapshots, no sweep lists)");
    const SweepPoint pt{cfg.snr_db.front(), cfg.snapshots.front()};
    const detail::TrialData data = detail::make_trial_data(cfg, pt, cfg.base_seed);
    const int k_true = cfg.scene.size();

    std::vector<SpectrumOutput> outputs;
    for (const MethodSpec& m : cfg.methods) {
        SpectrumOutput o;
        o.label = m.label;
        if (m.name == "music" && !cfg.true_covariance && pt.n == 1) {
            o.skipped = true;
            o.note = "music skipped: a single snapshot gives a rank-one sample covariance "
                     "with no usable noise subspace";
            outputs.push_back(std::move(o));
            continue;
        }
        if (m.name == "iaa" && cfg.true_covariance) {
            o.skipped = true;
            o.note = "iaa skipped: requires raw snapshots, which true-covariance mode "
                     "does not provide";
            outputs.push_back(std::move(o));
            continue;
        }
        if (m.name == "spa" || m.name == "spice-pp") {
            const detail::MethodRun run = detail::run_method_point(m, cfg, data, k_true);
            o.dense = false;
            o.thetas = run.estimate.thetas;
            o.values = run.estimate.powers;
            o.converged = run.converged;
        } else {
            o.dense = true;
            Spectrum sp{Grid(m.grid), Eigen::VectorXd()};
            if (m.name == "spice") {
                const SpiceResult fit = spice(data.r, cfg.geometry, data.n, Grid(m.grid), m.mode);
                sp.values = fit.p;
                o.converged = fit.converged;
            } else if (m.name == "music") {
                sp = music(data.r, cfg.geometry, m.k, Grid(m.grid));
            } else {
                const IaaResult res = iaa(data.y, cfg.geometry, Grid(m.grid));
                sp = res.spectrum;
                o.converged = res.converged;
            }
            o.thetas = sp.grid.points();
            o.values = sp.values;
        }
        outputs.push_back(std::move(o));
    }
    return outputs;
}

/// A single estimate produced from externally supplied snapshots.
struct EstimateRecord {
    std::string method;
    ParamEstimate estimate;
    bool converged = true;
    double runtime_s = 0.0;
    std::string criterion; ///< covariance-fit criterion, when one was solved
};

/// Run one configured method on a snapshot matrix. Dense spectra are
/// reduced to the method's k strongest peaks; this requires k.
inline EstimateRecord run_estimate(const MethodSpec& m, const ArrayGeometry& geom,
                                   const Eigen::MatrixXcd& y)
{
    if ((m.name == "spice" || m.name == "iaa") && m.k < 1)
        throw ConfigError("estimate: method '" + m.name +
                          "': k is required to reduce a dense spectrum to point estimates");
    EstimateRecord rec;
    rec.method = m.label;
    const auto start = std::chrono::steady_clock::now();
    if (m.name == "spa") {
        const SpaEstimate est = spa_estimate(y, geom, m.mode);
        rec.estimate = est;
        rec.converged = est.diagnostics.status == SdpStatus::optimal;
        rec.criterion = to_string(est.criterion);
    } else if (m.name == "spice" || m.name == "spice-pp") {
        const SpiceResult fit =
            spice(sample_covariance(y), geom, static_cast<int>(y.cols()), Grid(m.grid), m.mode);
        if (m.name == "spice-pp") {
            rec.estimate = spice_pp(fit, geom);
        } else {
            rec.estimate = detail::peaks_to_estimate({Grid(m.grid), fit.p}, m.k);
            rec.estimate.sigma = fit.sigma;
        }
        rec.converged = fit.converged;
        rec.criterion = to_string(fit.criterion);
    } else if (m.name == "music") {
        rec.estimate =
            detail::peaks_to_estimate(music(sample_covariance(y), geom, m.k, Grid(m.grid)), m.k);
    } else if (m.name == "iaa") {
        const IaaResult res = iaa(y, geom, Grid(m.grid));
        rec.estimate = detail::peaks_to_estimate(res.spectrum, m.k);
        rec.converged = res.converged;
    } else {
        throw DomainError("method '" + m.name + "' is not known");
    }
    rec.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

inline nlohmann::json estimate_record_json(const EstimateRecord& rec)
{
    nlohmann::json j;
    j["method"] = rec.method;
    j["converged"] = rec.converged;
    j["runtime_s"] = rec.runtime_s;
    if (!rec.criterion.empty())
        j["criterion"] = rec.criterion;
    j["rank"] = rec.estimate.rank;
    j["thetas"] = std::vector<double>(rec.estimate.thetas.begin(), rec.estimate.thetas.end());
    j["powers"] = std::vector<double>(rec.estimate.powers.begin(), rec.estimate.powers.end());
    j["sigma"] = std::vector<double>(rec.estimate.sigma.begin(), rec.estimate.sigma.end());
    return j;
}

/// Frequency lower-bound table over the config's sweep points, under
/// both noise-model assumptions. Columns: mean bound, then one column
/// per source.
inline void write_crlb_csv(std::ostream& out, const ExperimentConfig& cfg)
{
    const int k = cfg.scene.size();
    std::vector<std::string> header = {"snr_db", "n", "noise_model", "mean"};
    for (int i = 0; i < k; ++i)
        header.push_back("theta_" + std::to_string(i + 1));
    csv_row(out, header);
    for (const SweepPoint& pt : sweep_points(cfg)) {
        const double sigma = snr_to_sigma(cfg.scene.powers, pt.snr_db);
        for (const NoiseMode mode : {NoiseMode::equal, NoiseMode::distinct}) {
            const Eigen::VectorXd bound =
                crlb_stochastic(cfg.scene, cfg.geometry, sigma, pt.n, mode);
            std::vector<std::string> row = {format_g(pt.snr_db), std::to_string(pt.n),
                                            to_string(mode), format_g(bound.mean())};
            for (int i = 0; i < k; ++i)
                row.push_back(format_g(bound(i)));
            csv_row(out, row);
        }
    }
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace detail

/// Write trials.csv, aggregate.csv, and timing.csv under `dir`.
inline void write_montecarlo_files(const std::string& dir, const MonteCarloResult& result)
{
    const std::filesystem::path base(dir);
    std::filesystem::create_directories(base);
    {
        auto out = detail::open_output(base / "trials.csv");
        write_trials_csv(out, result.trials);
    }
    {
        auto out = detail::open_output(base / "aggregate.csv");
        write_aggregate_csv(out, result.aggregate);
    }
    {
        auto out = detail::open_output(base / "timing.csv");
        write_timing_csv(out, result.aggregate);
    }
}

/// Write one CSV per method (label.csv) plus the true scene
/// (scene.csv) under `dir`. Skipped methods produce no file; their
/// notes are returned for the caller to surface.
inline std::vector<std::string> write_spectrum_files(const std::string& dir,
                                                     const std::vector<SpectrumOutput>& outputs,
                                                     const ExperimentConfig& cfg)
{
    const std::filesystem::path base(dir);
    std::filesystem::create_directories(base);
    std::vector<std::string> notes;
    {
        auto out = detail::open_output(base / "scene.csv");
        csv_row(out, {"theta", "power"});
        for (int i = 0; i < cfg.scene.size(); ++i)
            csv_row(out, {format_g(cfg.scene.thetas[static_cast<std::size_t>(i)]),
                          format_g(cfg.scene.powers[static_cast<std::size_t>(i)])});
    }
    for (const SpectrumOutput& o : outputs) {
        if (o.skipped) {
            notes.push_back(o.note);
            continue;
        }
        auto out = detail::open_output(base / (o.label + ".csv"));
        csv_row(out, {"theta", o.dense ? "value" : "power"});
        for (int i = 0; i < o.thetas.size(); ++i)
            csv_row(out, {format_g(o.thetas(i)), format_g(o.values(i))});
    }
    return notes;
}

} // namespace gridless

#endif // GRIDLESS_EXPERIMENT_HPP
