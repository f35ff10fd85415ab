#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "kinuq/bifidelity.hpp"
#include "kinuq/errors.hpp"
#include "kinuq/fluid_solver.hpp"
#include "kinuq/io.hpp"
#include "kinuq/kinetic_solver.hpp"
#include "kinuq/scenarios.hpp"

// Experiment orchestration: JSON config, deterministic sample sweeps over a
// worker pool, surrogate training/evaluation pipelines, and run manifests.
//
// Config schema (all keys optional except "family"; unknown keys rejected):
//   family        "double_peak" | "sod" | "mixed_regime"
//   d1            half-width of the z layout (dimension = 2*d1 + 1)
//   n_x, n_v_h, n_v_l, l_v, dt, t_final, eps
//   m_train       training-set size M
//   n_test        test-set size n
//   seed          RNG seed shared by the train/test streams
//   budget        greedy selection budget N (train/study)
//   block_scaling experimentation flag: per-block [rho;u1;T] scaling of the
//                 low-fidelity snapshots by the z=0 initial-data block norms
//                 before selection/projection (default off)
//
// The effective scenario starts from desk defaults (or full-resolution
// defaults under --paper-scale) and explicit config keys override the base.

namespace kinuq {

struct HarnessConfig {
    ScenarioConfig scenario;
    int budget = 30;
    bool block_scaling = false;
};

namespace detail {

template <class T>
T config_number(const nlohmann::json& j, const char* key) {
    if (!j.at(key).is_number())
        throw ConfigError(std::string("config key \"") + key + "\" must be a number");
    return j.at(key).get<T>();
}

}  // namespace detail

inline HarnessConfig parse_config(const std::string& text, bool paper_scale = false) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!j.contains("family") || !j.at("family").is_string())
        throw ConfigError("config requires a string \"family\" key");

    const ScenarioFamily family = family_from_name(j.at("family").get<std::string>());
    HarnessConfig hc;
    hc.scenario = paper_scale ? paper_config(family) : desk_config(family);

    for (const auto& [key, value] : j.items()) {
        if (key == "family") continue;
        if (key == "d1") hc.scenario.d1 = detail::config_number<int>(j, "d1");
        else if (key == "n_x") hc.scenario.n_x = detail::config_number<int>(j, "n_x");
        else if (key == "n_v_h") hc.scenario.n_v_h = detail::config_number<int>(j, "n_v_h");
        else if (key == "n_v_l") hc.scenario.n_v_l = detail::config_number<int>(j, "n_v_l");
        else if (key == "l_v") hc.scenario.l_v = detail::config_number<double>(j, "l_v");
        else if (key == "dt") hc.scenario.dt = detail::config_number<double>(j, "dt");
        else if (key == "t_final") hc.scenario.t_final = detail::config_number<double>(j, "t_final");
        else if (key == "eps") hc.scenario.eps = detail::config_number<double>(j, "eps");
        else if (key == "m_train") hc.scenario.m_train = detail::config_number<int>(j, "m_train");
        else if (key == "n_test") hc.scenario.n_test = detail::config_number<int>(j, "n_test");
        else if (key == "seed") hc.scenario.seed = detail::config_number<std::uint64_t>(j, "seed");
        else if (key == "budget") hc.budget = detail::config_number<int>(j, "budget");
        else if (key == "block_scaling") {
            if (!value.is_boolean()) throw ConfigError("config key \"block_scaling\" must be a bool");
            hc.block_scaling = value.get<bool>();
        } else {
            throw ConfigError("unknown config key: \"" + key + "\"");
        }
    }

    const ScenarioConfig& s = hc.scenario;
    if (s.d1 < 1 || s.n_x < 2 || s.n_v_h < 2 || s.n_v_l < 2 || s.l_v <= 0.0 || s.dt <= 0.0 ||
        s.t_final < 0.0 || s.eps <= 0.0 || s.m_train < 1 || s.n_test < 1 || hc.budget < 1)
        throw ConfigError("config values out of range");
    return hc;
}

// Canonical dump of the effective configuration; its hash keys resumable
// artifacts and ties manifests to the exact setup that produced them.
inline std::string canonical_config_json(const HarnessConfig& hc) {
    nlohmann::ordered_json j;
    const ScenarioConfig& s = hc.scenario;
    j["family"] = family_name(s.family);
    j["d1"] = s.d1;
    j["n_x"] = s.n_x;
    j["n_v_h"] = s.n_v_h;
    j["n_v_l"] = s.n_v_l;
    j["l_v"] = s.l_v;
    j["dt"] = s.dt;
    j["t_final"] = s.t_final;
    j["eps"] = s.eps;
    j["m_train"] = s.m_train;
    j["n_test"] = s.n_test;
    j["seed"] = s.seed;
    j["budget"] = hc.budget;
    j["block_scaling"] = hc.block_scaling;
    return j.dump();
}

inline std::string config_hash(const HarnessConfig& hc) {
    return fnv1a64_hex(canonical_config_json(hc));
}

// --- Worker pool -------------------------------------------------------------
// Runs fn(i) for i in [0, count) on `workers` threads. Results land in indexed
// slots, so aggregation order never depends on scheduling; callers write files
// sequentially afterwards (single writer per output file). The first exception
// wins and is rethrown after all threads join.

template <class Fn>
inline void parallel_for_indexed(std::size_t count, int workers, Fn&& fn) {
    workers = std::max(1, workers);
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            {
                std::scoped_lock lock(error_mutex);
                if (error) return;
            }
            try {
                fn(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// --- Manifest ----------------------------------------------------------------

inline constexpr const char* kArtifactVersion = "kinuq 0.1.0";

struct RunManifest {
    std::string command;
    std::string scenario;
    std::string config_hash;
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<std::pair<std::string, double>> phases;  // name, wall seconds
    std::vector<std::string> notes;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();

    void add_phase(const std::string& name, double seconds) { phases.emplace_back(name, seconds); }
};

// Lists every file under `dir` except manifest.json itself, with checksums,
// then writes manifest.json last: its presence marks a completed run.
inline void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
    namespace fs = std::filesystem;
    nlohmann::ordered_json j;
    j["version"] = kArtifactVersion;
    j["command"] = m.command;
    j["scenario"] = m.scenario;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["workers"] = m.workers;
    auto phases = nlohmann::ordered_json::array();
    for (const auto& [name, seconds] : m.phases)
        phases.push_back({{"name", name}, {"seconds", seconds}});
    j["phases"] = std::move(phases);
    j["notes"] = m.notes;
    for (const auto& [key, value] : m.extra.items()) j[key] = value;

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
            files.push_back(fs::relative(entry.path(), dir));
    std::sort(files.begin(), files.end());
    auto inventory = nlohmann::ordered_json::array();
    for (const auto& rel : files) {
        const std::string content = read_file(dir / rel);
        inventory.push_back({{"path", rel.generic_string()},
                             {"fnv1a64", fnv1a64_hex(content)},
                             {"bytes", content.size()}});
    }
    j["files"] = std::move(inventory);
    write_file(dir / "manifest.json", j.dump(2) + "\n");
}

// --- Timers ------------------------------------------------------------------

class PhaseTimer {
  public:
    PhaseTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

// --- Shared sweep helpers ------------------------------------------------------

namespace detail {

struct SweepTiming {
    double total_seconds = 0.0;
    std::size_t runs = 0;
    double mean_seconds() const { return runs == 0 ? 0.0 : total_seconds / runs; }
};

// Low-fidelity snapshots for a sample set, computed in parallel. Per-run
// timing is summed across workers (activity seconds, not wall seconds).
inline std::vector<Snapshot> low_sweep(const ScenarioConfig& cfg,
                                       std::span<const ParameterSample> samples, int workers,
                                       SweepTiming* timing = nullptr) {
    std::vector<Snapshot> out(samples.size());
    std::atomic<double> secs{0.0};
    parallel_for_indexed(samples.size(), workers, [&](std::size_t i) {
        PhaseTimer t;
        out[i] = Snapshot::from_field(samples[i].id, run_low_fidelity(cfg, samples[i]), false);
        secs.fetch_add(t.seconds());
    });
    if (timing) {
        timing->total_seconds = secs.load();
        timing->runs = samples.size();
    }
    return out;
}

inline std::vector<Snapshot> high_sweep(const ScenarioConfig& cfg,
                                        std::span<const ParameterSample> samples, int workers,
                                        SweepTiming* timing = nullptr) {
    // One kernel per thread would also work, but the kernel is read-only
    // after precomputation, so all workers share it.
    const SpectralKernel sk = precompute_spectral(cfg.n_v_h, cfg.l_v);
    std::vector<Snapshot> out(samples.size());
    std::atomic<double> secs{0.0};
    parallel_for_indexed(samples.size(), workers, [&](std::size_t i) {
        PhaseTimer t;
        out[i] = Snapshot::from_field(samples[i].id, run_high_fidelity(cfg, samples[i], sk), true);
        secs.fetch_add(t.seconds());
    });
    if (timing) {
        timing->total_seconds = secs.load();
        timing->runs = samples.size();
    }
    return out;
}

inline void annotate_sample(const char* what, std::uint64_t id, const std::exception& e) {
    std::fprintf(stderr, "%s failed at sample %llu: %s\n", what,
                 static_cast<unsigned long long>(id), e.what());
}

}  // namespace detail

// --- cli_run -------------------------------------------------------------------

// One field CSV per sample, named by sample id; manifest written last.
inline void cli_run(bool high_model, const HarnessConfig& hc,
                    std::span<const ParameterSample> samples, const std::filesystem::path& out,
                    int workers) {
    namespace fs = std::filesystem;
    const ScenarioConfig& cfg = hc.scenario;
    for (const auto& s : samples)
        if (static_cast<int>(s.z.size()) != cfg.dimension())
            throw SampleMismatch("sample " + std::to_string(s.id) + " has dimension " +
                                 std::to_string(s.z.size()) + ", scenario needs " +
                                 std::to_string(cfg.dimension()));
    fs::create_directories(out);

    PhaseTimer wall;
    std::vector<MacroField> fields;
    fields.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        fields.emplace_back(cfg.n_x, 1.0 / cfg.n_x, cfg.boundary(), 0.0);
    const SpectralKernel sk =
        high_model ? precompute_spectral(cfg.n_v_h, cfg.l_v) : SpectralKernel{};
    parallel_for_indexed(samples.size(), workers, [&](std::size_t i) {
        try {
            fields[i] = high_model ? run_high_fidelity(cfg, samples[i], sk)
                                   : run_low_fidelity(cfg, samples[i]);
        } catch (const SolverError& e) {
            detail::annotate_sample(high_model ? "high-fidelity run" : "low-fidelity run",
                                    samples[i].id, e);
            throw;
        }
    });
    const double sweep_seconds = wall.seconds();
    for (std::size_t i = 0; i < samples.size(); ++i)
        write_field_csv(out / (std::to_string(samples[i].id) + ".csv"), fields[i]);

    RunManifest m;
    m.command = high_model ? "run high" : "run low";
    m.scenario = family_name(cfg.family);
    m.config_hash = config_hash(hc);
    m.seed = cfg.seed;
    m.workers = workers;
    m.add_phase(high_model ? "high_sweep" : "low_sweep", sweep_seconds);
    m.extra["samples"] = samples.size();
    write_manifest(out, m);
}

// --- cli_train -------------------------------------------------------------------

struct TrainResult {
    SelectionResult selection;
    int requested_budget = 0;
    bool resumed_low_sweep = false;
    double mean_low_seconds = 0.0;
    double mean_high_seconds = 0.0;
};

// Offline stage: low sweep over the training set (resumable), greedy
// selection, high-fidelity runs at the selected points, assembled surrogate
// persisted under out/surrogate.
inline TrainResult cli_train(const HarnessConfig& hc, const std::filesystem::path& out,
                             int workers) {
    namespace fs = std::filesystem;
    const ScenarioConfig& cfg = hc.scenario;
    if (hc.budget > cfg.m_train)
        throw ConfigError("budget " + std::to_string(hc.budget) + " exceeds training-set size " +
                          std::to_string(cfg.m_train));
    fs::create_directories(out);
    const std::string hash = config_hash(hc);

    std::vector<ParameterSample> train =
        draw_samples(cfg.dimension(), cfg.m_train, cfg.seed, SampleStream::train);

    TrainResult result;
    result.requested_budget = hc.budget;
    RunManifest m;
    m.command = "train";
    m.scenario = family_name(cfg.family);
    m.config_hash = hash;
    m.seed = cfg.seed;
    m.workers = workers;

    // Phase 1: low-fidelity sweep, resumable. The sweep file is keyed by the
    // config hash minus budget-irrelevant fields; budget does not affect it,
    // so a re-train with a new budget reuses the snapshots.
    nlohmann::ordered_json sweep_key;
    sweep_key["family"] = family_name(cfg.family);
    sweep_key["d1"] = cfg.d1;
    sweep_key["n_x"] = cfg.n_x;
    sweep_key["n_v_l"] = cfg.n_v_l;
    sweep_key["l_v"] = cfg.l_v;
    sweep_key["dt"] = cfg.dt;
    sweep_key["t_final"] = cfg.t_final;
    sweep_key["eps"] = cfg.eps;
    sweep_key["m_train"] = cfg.m_train;
    sweep_key["seed"] = cfg.seed;
    sweep_key["block_scaling"] = hc.block_scaling;
    const std::string sweep_hash = fnv1a64_hex(sweep_key.dump());

    std::vector<Snapshot> low_train;
    const fs::path sweep_csv = out / "low_sweep.csv";
    const fs::path sweep_meta = out / "low_sweep.meta.json";
    PhaseTimer low_wall;
    if (fs::exists(sweep_csv) && fs::exists(sweep_meta)) {
        try {
            nlohmann::json jm = nlohmann::json::parse(read_file(sweep_meta));
            if (jm.at("sweep_hash").get<std::string>() == sweep_hash &&
                jm.at("count").get<std::size_t>() == train.size()) {
                std::vector<std::uint64_t> ids;
                std::vector<std::vector<double>> rows;
                detail::parse_snapshot_matrix_csv(sweep_csv, ids, rows);
                if (ids.size() == train.size()) {
                    low_train.resize(train.size());
                    for (std::size_t i = 0; i < train.size(); ++i) {
                        low_train[i].id = ids[i];
                        low_train[i].u = std::move(rows[i]);
                    }
                    result.resumed_low_sweep = true;
                }
            }
        } catch (const std::exception&) {
            // unreadable sweep artifacts: fall through and recompute
        }
    }
    detail::SweepTiming low_timing;
    if (!result.resumed_low_sweep) {
        low_train = detail::low_sweep(cfg, train, workers, &low_timing);
        if (hc.block_scaling) {
            const auto w = block_weights(
                Snapshot::from_field(0, initial_macro(cfg, ParameterSample{0, std::vector<double>(
                                                             cfg.dimension(), 0.0)}),
                                     false)
                    .u,
                1.0 / cfg.n_x);
            for (auto& s : low_train) scale_blocks(s.u, w);
        }
        std::vector<std::uint64_t> ids(low_train.size());
        std::vector<std::vector<double>> rows(low_train.size());
        for (std::size_t i = 0; i < low_train.size(); ++i) {
            ids[i] = low_train[i].id;
            rows[i] = low_train[i].u;
        }
        write_file(sweep_csv, detail::snapshot_matrix_csv(ids, rows));
        nlohmann::ordered_json jm;
        jm["sweep_hash"] = sweep_hash;
        jm["count"] = low_train.size();
        write_file(sweep_meta, jm.dump(2) + "\n");
    }
    m.add_phase("low_sweep", low_wall.seconds());
    result.mean_low_seconds = low_timing.mean_seconds();

    // Phase 2: greedy selection. A budget beyond the numerical rank stops
    // early; the manifest then records the smaller selected budget.
    PhaseTimer select_wall;
    SelectionResult sel = greedy_select(low_train, hc.budget, 1.0 / cfg.n_x);
    m.add_phase("greedy_select", select_wall.seconds());
    for (std::size_t k = 0; k < sel.residuals.size(); ++k)
        std::printf("d[%zu] = %s\n", k + 1, format_double(sel.residuals[k]).c_str());
    if (sel.stopped_early)
        std::fprintf(stderr,
                     "greedy selection stopped early at %zu of %d (residuals at round-off)\n",
                     sel.ids.size(), hc.budget);

    // Phase 3: high-fidelity runs at the selected points.
    std::vector<ParameterSample> selected_samples;
    selected_samples.reserve(sel.ids.size());
    for (auto pos : sel.positions) selected_samples.push_back(train[pos]);
    detail::SweepTiming high_timing;
    PhaseTimer high_wall;
    std::vector<Snapshot> high_sel;
    try {
        high_sel = detail::high_sweep(cfg, selected_samples, workers, &high_timing);
    } catch (const SolverError& e) {
        std::fprintf(stderr, "high-fidelity sweep failed: %s\n", e.what());
        throw;
    }
    m.add_phase("high_sweep", high_wall.seconds());
    result.mean_high_seconds = high_timing.mean_seconds();

    // Phase 4: assemble + persist.
    PhaseTimer assemble_wall;
    BiFidelitySurrogate sur = assemble_surrogate(sel, high_sel);
    SurrogateMeta meta;
    meta.scenario_hash = hash;
    meta.n_x = cfg.n_x;
    meta.dx = 1.0 / cfg.n_x;
    meta.boundary = cfg.boundary();
    meta.t_final = cfg.t_final;
    for (std::size_t k = 0; k < sur.sel.ids.size(); ++k)
        meta.selected_z.push_back(train[sur.sel.positions[k]].z);
    if (hc.block_scaling) {
        const auto w = block_weights(
            Snapshot::from_field(0, initial_macro(cfg, ParameterSample{0, std::vector<double>(
                                                         cfg.dimension(), 0.0)}),
                                 false)
                .u,
            meta.dx);
        meta.block_weights.assign(w.begin(), w.end());
    }
    save_surrogate(out / "surrogate", sur, meta);
    m.add_phase("assemble", assemble_wall.seconds());

    m.extra["requested_budget"] = hc.budget;
    m.extra["selected_budget"] = sur.budget();
    m.extra["stopped_early"] = sur.sel.stopped_early;
    m.extra["gram_condition"] = sur.condition;
    m.extra["resumed_low_sweep"] = result.resumed_low_sweep;
    m.extra["timing"] = {{"mean_low_seconds", result.mean_low_seconds},
                         {"mean_high_seconds", result.mean_high_seconds}};
    if (result.resumed_low_sweep)
        m.notes.push_back("low-fidelity sweep restored from a previous run with the same setup");
    write_manifest(out, m);
    result.selection = std::move(sur.sel);
    return result;
}

// --- cli_eval -------------------------------------------------------------------

struct EvalResult {
    std::vector<int> r_values;
    std::vector<QuantityErrors> errors;     // per r, empty without references
    std::optional<QuantityErrors> low_baseline;
    double mean_low_seconds = 0.0;
    double mean_high_seconds = 0.0;  // 0 when references are disabled
};

// Online stage: one low-fidelity run + reconstruction per test sample;
// error table against flag-gated high-fidelity references.
inline EvalResult cli_eval(const HarnessConfig& hc, const std::filesystem::path& surrogate_dir,
                           std::span<const ParameterSample> test,
                           const std::filesystem::path& out, int workers, bool with_reference,
                           std::vector<int> r_values = {}) {
    namespace fs = std::filesystem;
    const ScenarioConfig& cfg = hc.scenario;
    SurrogateMeta meta;
    BiFidelitySurrogate sur = load_surrogate(surrogate_dir, &meta);
    if (meta.n_x != cfg.n_x)
        throw GridMismatch("surrogate trained at n_x = " + std::to_string(meta.n_x) +
                           ", config has " + std::to_string(cfg.n_x));
    for (const auto& s : test)
        if (static_cast<int>(s.z.size()) != cfg.dimension())
            throw SampleMismatch("test sample " + std::to_string(s.id) + " has dimension " +
                                 std::to_string(s.z.size()) + ", scenario needs " +
                                 std::to_string(cfg.dimension()));
    fs::create_directories(out);

    EvalResult result;
    if (r_values.empty()) r_values.push_back(sur.budget());
    std::sort(r_values.begin(), r_values.end());
    auto dup = std::unique(r_values.begin(), r_values.end());
    if (dup != r_values.end()) {
        std::fprintf(stderr, "duplicate r values deduplicated\n");
        r_values.erase(dup, r_values.end());
    }
    if (r_values.front() < 1 || r_values.back() > sur.budget())
        throw BudgetExceedsRank("r values outside trained budget 1.." +
                                std::to_string(sur.budget()));
    result.r_values = r_values;

    RunManifest m;
    m.command = "eval";
    m.scenario = family_name(cfg.family);
    m.config_hash = config_hash(hc);
    m.seed = cfg.seed;
    m.workers = workers;

    // Low-fidelity runs at the test points.
    detail::SweepTiming low_timing;
    PhaseTimer low_wall;
    std::vector<Snapshot> low_test = detail::low_sweep(cfg, test, workers, &low_timing);
    if (!meta.block_weights.empty()) {
        std::array<double, 3> w{meta.block_weights[0], meta.block_weights[1],
                                meta.block_weights[2]};
        for (auto& s : low_test) scale_blocks(s.u, w);
    }
    m.add_phase("low_sweep", low_wall.seconds());
    result.mean_low_seconds = low_timing.mean_seconds();

    // Reconstructions at the full requested budget (the last r) are written
    // as fields; every r in the table is evaluated via the prefix property.
    PhaseTimer recon_wall;
    const int r_out = r_values.back();
    std::vector<std::vector<Snapshot>> est(r_values.size());
    for (auto& v : est) v.resize(test.size());
    parallel_for_indexed(test.size(), workers, [&](std::size_t i) {
        for (std::size_t k = 0; k < r_values.size(); ++k) {
            Reconstruction rec = reconstruct(sur, low_test[i].u, meta.dx, cfg.boundary(),
                                             cfg.t_final, r_values[k]);
            Snapshot s;
            s.id = test[i].id;
            s.high_fidelity = true;
            s.u = std::move(rec.snapshot);
            est[k][i] = std::move(s);
        }
    });
    m.add_phase("reconstruct", recon_wall.seconds());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& u = est.back()[i].u;
        write_field_csv(out / ("bifi_" + std::to_string(test[i].id) + ".csv"),
                        snapshot_to_field(u, meta.dx, cfg.boundary(), cfg.t_final));
    }

    // Flag-gated high-fidelity references and the error table.
    if (with_reference) {
        detail::SweepTiming high_timing;
        PhaseTimer high_wall;
        std::vector<Snapshot> refs = detail::high_sweep(cfg, test, workers, &high_timing);
        m.add_phase("high_references", high_wall.seconds());
        result.mean_high_seconds = high_timing.mean_seconds();
        for (std::size_t i = 0; i < test.size(); ++i)
            write_field_csv(out / ("ref_" + std::to_string(test[i].id) + ".csv"),
                            snapshot_to_field(refs[i].u, meta.dx, cfg.boundary(), cfg.t_final));

        std::vector<Snapshot> low_unscaled = low_test;
        if (!meta.block_weights.empty()) {
            // undo scaling for the physical low-fidelity baseline
            std::array<double, 3> w{1.0 / meta.block_weights[0], 1.0 / meta.block_weights[1],
                                    1.0 / meta.block_weights[2]};
            for (auto& s : low_unscaled) scale_blocks(s.u, w);
        }
        result.low_baseline = mean_l2_error(refs, low_unscaled, meta.dx);
        for (std::size_t k = 0; k < r_values.size(); ++k)
            result.errors.push_back(mean_l2_error(refs, est[k], meta.dx));

        std::string csv = "r,err_rho,err_u1,err_T,err_lowfi\n";
        for (std::size_t k = 0; k < r_values.size(); ++k) {
            csv += std::to_string(r_values[k]) + ',' + format_double(result.errors[k].rho) +
                   ',' + format_double(result.errors[k].u1) + ',' +
                   format_double(result.errors[k].T) + ',' +
                   format_double(result.low_baseline->rho) + '\n';
        }
        write_file(out / "report.csv", csv);

        nlohmann::ordered_json rep;
        rep["r"] = r_values;
        auto err_array = [&](auto getter) {
            std::vector<double> v;
            for (const auto& e : result.errors) v.push_back(getter(e));
            return v;
        };
        rep["err_rho"] = err_array([](const QuantityErrors& e) { return e.rho; });
        rep["err_u1"] = err_array([](const QuantityErrors& e) { return e.u1; });
        rep["err_T"] = err_array([](const QuantityErrors& e) { return e.T; });
        rep["lowfi_baseline"] = {{"rho", result.low_baseline->rho},
                                 {"u1", result.low_baseline->u1},
                                 {"T", result.low_baseline->T}};
        rep["timing"] = {{"mean_low_seconds", result.mean_low_seconds},
                         {"mean_high_seconds", result.mean_high_seconds},
                         {"speedup",
                          result.mean_low_seconds > 0.0
                              ? result.mean_high_seconds / result.mean_low_seconds
                              : 0.0}};
        write_file(out / "report.json", rep.dump(2) + "\n");
    } else {
        m.notes.push_back("high-fidelity references disabled: reconstructions only, no errors");
    }

    m.extra["samples"] = test.size();
    m.extra["budget"] = r_out;
    write_manifest(out, m);
    return result;
}

// --- cli_study ------------------------------------------------------------------

// Full pipeline: train (resumable) at the config budget, then a nested-prefix
// r-sweep with references, a plot-ready convergence CSV, and mean/stddev
// fields over the test set.
inline EvalResult cli_study(const HarnessConfig& hc, std::vector<int> r_list,
                            const std::filesystem::path& out, int workers) {
    namespace fs = std::filesystem;
    const ScenarioConfig& cfg = hc.scenario;
    if (r_list.empty()) throw ConfigError("study requires a non-empty r list");
    for (int r : r_list)
        if (r < 1 || r > hc.budget)
            throw ConfigError("study r value " + std::to_string(r) +
                              " outside trained budget 1.." + std::to_string(hc.budget));

    PhaseTimer train_wall;
    TrainResult train = cli_train(hc, out, workers);
    const double train_seconds = train_wall.seconds();
    std::vector<ParameterSample> test =
        draw_samples(cfg.dimension(), cfg.n_test, cfg.seed, SampleStream::test);
    PhaseTimer eval_wall;
    EvalResult eval = cli_eval(hc, out / "surrogate", test, out / "eval", workers,
                               /*with_reference=*/true, r_list);
    const double eval_seconds = eval_wall.seconds();
    // train mean timings are the representative speedup measurement (the
    // eval sweep re-measures low runs; either source works at these sizes)
    if (train.mean_high_seconds > 0.0) eval.mean_high_seconds = train.mean_high_seconds;
    if (train.mean_low_seconds > 0.0) eval.mean_low_seconds = train.mean_low_seconds;

    std::string csv = "r,err_rho,err_u1,err_T,err_lowfi\n";
    for (std::size_t k = 0; k < eval.r_values.size(); ++k)
        csv += std::to_string(eval.r_values[k]) + ',' + format_double(eval.errors[k].rho) + ',' +
               format_double(eval.errors[k].u1) + ',' + format_double(eval.errors[k].T) + ',' +
               format_double(eval.low_baseline->rho) + '\n';
    write_file(out / "study.csv", csv);

    // Mean and standard deviation over the test set, per cell, for the
    // bi-fidelity estimate at max r, the high-fidelity reference, and the
    // low-fidelity model.
    const double dx = 1.0 / cfg.n_x;
    auto accumulate = [&](const std::filesystem::path& dir, const std::string& prefix) {
        std::vector<Primitives> fields;
        for (const auto& s : test) {
            fs::path p = dir / (prefix + std::to_string(s.id) + ".csv");
            fields.push_back(read_field_csv(p));
        }
        return fields;
    };
    std::vector<Primitives> bifi = accumulate(out / "eval", "bifi_");
    std::vector<Primitives> refs = accumulate(out / "eval", "ref_");

    std::string ms = "x";
    for (const char* model : {"bifi", "high"})
        for (const char* q : {"rho", "u1", "T"})
            ms += std::string(",mean_") + q + "_" + model + ",std_" + q + "_" + model;
    ms += '\n';
    const std::size_t n = test.size();
    for (int i = 0; i < cfg.n_x; ++i) {
        ms += format_double((i + 0.5) * dx);
        for (const auto* set : {&bifi, &refs}) {
            for (int q = 0; q < 3; ++q) {
                double mean = 0.0, m2 = 0.0;
                for (std::size_t s = 0; s < n; ++s) {
                    const Primitives& f = (*set)[s];
                    const double v = q == 0 ? f.rho[i] : (q == 1 ? f.u1[i] : f.T[i]);
                    mean += v;
                }
                mean /= static_cast<double>(n);
                for (std::size_t s = 0; s < n; ++s) {
                    const Primitives& f = (*set)[s];
                    const double v = q == 0 ? f.rho[i] : (q == 1 ? f.u1[i] : f.T[i]);
                    m2 += (v - mean) * (v - mean);
                }
                const double sd = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
                ms += ',' + format_double(mean) + ',' + format_double(sd);
            }
        }
        ms += '\n';
    }
    write_file(out / "mean_std.csv", ms);

    RunManifest m;
    m.command = "study";
    m.scenario = family_name(cfg.family);
    m.config_hash = config_hash(hc);
    m.seed = cfg.seed;
    m.workers = workers;
    m.add_phase("train", train_seconds);
    m.add_phase("eval", eval_seconds);
    m.extra["r_list"] = eval.r_values;
    m.extra["timing"] = {{"mean_low_seconds", eval.mean_low_seconds},
                         {"mean_high_seconds", eval.mean_high_seconds},
                         {"speedup",
                          eval.mean_low_seconds > 0.0
                              ? eval.mean_high_seconds / eval.mean_low_seconds
                              : 0.0}};
    if (cfg.n_test < 1000)
        m.notes.push_back("desk-scale test set (n=" + std::to_string(cfg.n_test) +
                          ") substitutes the full-resolution n=1000");
    write_manifest(out, m);
    return eval;
}

}  // namespace kinuq
