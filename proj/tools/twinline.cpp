// twinline CLI: simulate conveyor scenarios, replay recorded or simulated
// sessions into KPI reports, and evaluate reports against ground-truth
// ledgers. Exit codes: 0 success, 2 input/validation error, 3 success with
// data-gap minutes (report still written).

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "twinline/engine.hpp"
#include "twinline/ingest.hpp"
#include "twinline/kpi.hpp"
#include "twinline/log.hpp"
#include "twinline/simulator.hpp"

namespace fs = std::filesystem;
using namespace twinline;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitDataGaps = 3;

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
    Scenario sc = load_scenario(scenario_path);
    if (seed) sc.rng_seed = *seed;
    log(LogLevel::info, "simulating " + std::to_string(sc.duration_s) + " s, seed " +
                            std::to_string(sc.rng_seed));
    const SimOutput out = simulate(sc);
    write_sim_output(out_dir, out);

    double downtime_s = 0.0;
    for (const auto& [a, b] : out.ledger.stop_intervals) downtime_s += to_seconds(b - a);
    std::printf(
        "session %.1f min | injected %zu, exits %zu, removals %zu | stops %zu (%.1f s down) | "
        "true OEE %s\n",
        sc.duration_s / 60.0, out.ledger.injections.size(), out.ledger.exits.size(),
        out.ledger.removals_at_qa.size(), out.ledger.stop_intervals.size(), downtime_s,
        out.true_kpis.session.oee ? std::to_string(*out.true_kpis.session.oee).c_str() : "n/a");
    return kExitOk;
}

int cmd_replay(const std::vector<std::string>& detection_paths, const std::string& sensor_path,
               const std::string& topology_path, const std::string& out_dir,
               const std::string& ledger_path, bool dump_tracks, const EngineConfig& cfg) {
    ReplayInputs in;
    std::vector<fs::path> det_inputs(detection_paths.begin(), detection_paths.end());
    in.detections = read_detections_multi(det_inputs);
    if (!sensor_path.empty()) {
        auto parsed = read_sensor_csv(sensor_path);
        in.sensors = std::move(parsed.samples);
        if (parsed.warnings.out_of_order > 0)
            log(LogLevel::warn, std::to_string(parsed.warnings.out_of_order) +
                                    " out-of-order sensor rows re-sorted");
    }
    in.topology = load_topology(topology_path);
    if (!ledger_path.empty()) in.ledger = load_ledger(ledger_path);

    const ReplayResult res = run_replay(in, cfg);
    const Report report = make_report(res);

    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    save_report_json(out / "report.json", report);
    write_report_csv(out / "report.csv", report, cfg.rolling_mean_k);
    write_crossings_jsonl(out / "crossings.jsonl", res.crossings);
    write_run_stop_csv(out / "runstop.csv", res.signal);
    if (dump_tracks) write_tracks_jsonl(out / "tracks.jsonl", res.snapshots_by_camera);

    if (in.ledger) {
        EvalPrediction pred;
        pred.edge_series = &res.edge_series;
        pred.minute_kpis = &res.minutes;
        pred.snapshots_by_camera = &res.snapshots_by_camera;
        const EvalSeries eval = evaluate(pred, *in.ledger, in.topology);
        write_eval_csv(out / "eval.csv", eval);
        std::printf("eval: mean count err %.3f%%, mean |OEE err| %s, max accuracy %s\n",
                    100.0 * eval.mean_count_err,
                    eval.mean_oee_err ? (std::to_string(100.0 * *eval.mean_oee_err) + "%").c_str()
                                      : "n/a",
                    eval.max_accuracy_pct ? (std::to_string(*eval.max_accuracy_pct) + "%").c_str()
                                          : "n/a");
    }

    const auto& s = res.session;
    std::printf("session: A=%.4f P=%s Q=%.4f OEE=%s | downtime %.1f s | q_total %ld q_good %ld%s\n",
                s.availability, s.performance ? std::to_string(*s.performance).c_str() : "n/a",
                s.quality, s.oee ? std::to_string(*s.oee).c_str() : "n/a", s.t_downtime_s,
                s.counts.q_total, s.counts.q_good,
                s.performance_anomalous ? " | ANOMALY: performance exceeded 1" : "");
    if (res.any_data_gap) {
        log(LogLevel::warn, "some minutes had no usable camera while the line ran (data gaps)");
        return kExitDataGaps;
    }
    return kExitOk;
}

int cmd_evaluate(const std::string& report_path, const std::string& ledger_path,
                 const std::string& out_dir, const std::string& tracks_path) {
    const Report report = load_report(report_path);
    const GroundTruthLedger ledger = load_ledger(ledger_path);

    if (std::llabs(report.session_end - ledger.session_end) > kMinuteMs) {
        std::fprintf(stderr, "session mismatch: report %lld ms vs ledger %lld ms\n",
                     static_cast<long long>(report.session_end),
                     static_cast<long long>(ledger.session_end));
        return kExitInputError;
    }

    // the report carries everything needed to rebuild the truth-side KPIs
    LineTopology topo;
    topo.ideal_cycle_time_s = report.session.tau_ideal_s;
    topo.planned_production_time_s = report.session.t_planned_s;
    topo.nodes = {{1, "Start"}, {2, "Quality Assurance"}, {3, "End"}};
    for (const auto& [eid, series] : report.edge_series) {
        EdgeDef e;
        e.id = eid;
        e.from_node = eid == 1 ? 1 : 2;
        e.to_node = eid == 1 ? 2 : 3;
        TripwireDef tw;  // placeholder geometry; evaluation never intersects it
        tw.camera.value = 1;
        tw.priority = 1;
        tw.wire_a = {{0.0, 0.0}, {0.0, 1.0}};
        e.tripwires.push_back(tw);
        topo.edges.push_back(std::move(e));
    }

    std::map<int, std::vector<TrackSnapshot>> snapshots;
    EvalPrediction pred;
    pred.edge_series = &report.edge_series;
    pred.minute_kpis = &report.minutes;
    if (!tracks_path.empty()) {
        snapshots = read_tracks_jsonl(tracks_path);
        pred.snapshots_by_camera = &snapshots;
    }

    const EvalSeries eval = evaluate(pred, ledger, topo);
    fs::create_directories(out_dir);
    write_eval_csv(fs::path(out_dir) / "eval.csv", eval);

    std::printf("mean count err %.4f%% | mean |OEE err| %s | max accuracy %s\n",
                100.0 * eval.mean_count_err,
                eval.mean_oee_err ? (std::to_string(100.0 * *eval.mean_oee_err) + "%").c_str()
                                  : "n/a",
                eval.max_accuracy_pct
                    ? (std::to_string(*eval.max_accuracy_pct) + "%").c_str()
                    : (eval.accuracy_absent_reason ? eval.accuracy_absent_reason->c_str() : "n/a"));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"production-line monitoring engine"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir;
    std::optional<std::uint64_t> seed;
    auto* sim = app.add_subcommand("simulate", "generate a synthetic session from a scenario");
    sim->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    sim->add_option("--out", out_dir, "output directory")->required();
    sim->add_option("--seed", seed, "override the scenario rng seed");

    std::vector<std::string> det_paths;
    std::string sensor_path, topology_path, ledger_path, replay_out;
    bool dump_tracks = false;
    EngineConfig cfg;
    bool avail_manual = false;
    double th_run = 0.0, th_stop = 0.0;
    auto* rep = app.add_subcommand("replay", "run the tracking/counting/KPI pipeline");
    rep->add_option("--detections", det_paths, "detection file(s) or directory")->required();
    rep->add_option("--sensor", sensor_path, "sensor CSV (omit to use the ledger's stops)");
    rep->add_option("--topology", topology_path, "line topology JSON")->required();
    rep->add_option("--out", replay_out, "output directory")->required();
    rep->add_option("--ledger", ledger_path, "ground-truth ledger for evaluation");
    rep->add_flag("--dump-tracks", dump_tracks, "write tracks.jsonl");
    rep->add_option("--refractory", cfg.counting.refractory_s, "crossing refractory seconds");
    rep->add_option("--avail-window", cfg.availability.window_s, "vibration window seconds");
    rep->add_option("--avail-run-threshold", th_run, "manual run threshold (m/s^2 std)");
    rep->add_option("--avail-stop-threshold", th_stop, "manual stop threshold (m/s^2 std)");
    rep->add_flag("--avail-manual", avail_manual, "use manual thresholds");

    std::string eval_report, eval_ledger, eval_out, eval_tracks;
    auto* ev = app.add_subcommand("evaluate", "compare a report against a ledger");
    ev->add_option("--report", eval_report, "report.json from replay")->required();
    ev->add_option("--ledger", eval_ledger, "ground-truth ledger")->required();
    ev->add_option("--out", eval_out, "output directory")->required();
    ev->add_option("--tracks", eval_tracks, "tracks.jsonl for per-frame accuracy");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(scenario_path, out_dir, seed);
        if (rep->parsed()) {
            if (avail_manual) {
                cfg.availability.mode = AvailabilityConfig::ThresholdMode::manual;
                cfg.availability.run_threshold = th_run;
                cfg.availability.stop_threshold = th_stop;
            }
            return cmd_replay(det_paths, sensor_path, topology_path, replay_out, ledger_path,
                              dump_tracks, cfg);
        }
        if (ev->parsed()) return cmd_evaluate(eval_report, eval_ledger, eval_out, eval_tracks);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInputError;
    }
    return kExitInputError;
}
