#include "ioth/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ioth/actuation.hpp"
#include "ioth/csv.hpp"
#include "ioth/device_sim.hpp"
#include "ioth/errors.hpp"
#include "ioth/json_util.hpp"
#include "ioth/kinematics.hpp"
#include "ioth/labeling.hpp"
#include "ioth/learn.hpp"
#include "ioth/log.hpp"
#include "ioth/netcapture.hpp"
#include "ioth/rng.hpp"
#include "ioth/sequencer.hpp"

namespace ioth::cli {

namespace {

// Seed streams for the two independent draws inside `simulate`, so one master
// seed drives both and stays stable if either module gains extra draws.
constexpr std::uint64_t kActuationStream = 0xAC7;
constexpr std::uint64_t kDeviceStream = 0xDE5;
constexpr std::uint64_t kFinalFitStream = 0xF17;

// Truncated (not rounded) fixed-point display. The small epsilon absorbs
// binary representation error on values that are exact decimals.
std::string trunc_fixed(double v, int places) {
    const double scale = std::pow(10.0, places);
    const double t = std::floor(v * scale + 1e-9) / scale;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", places, t);
    return buf;
}

// Durations are differences of microsecond-grid timestamps; printing them at
// microsecond precision hides the float noise the subtraction introduces.
std::string fmt_seconds(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    std::string s = buf;
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

std::pair<double, double> parse_window(const std::string& text, const std::string& stage) {
    const auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= text.size()) {
        throw IothError(stage, "window '" + text + "' must be <start>:<end> in seconds");
    }
    const double start = csv::parse_double(text.substr(0, colon), stage);
    const double end = csv::parse_double(text.substr(colon + 1), stage);
    if (!(start < end)) throw IothError(stage, "window '" + text + "' has start >= end");
    return {start, end};
}

labeling::TimestampSource parse_timestamp_source(const std::string& text,
                                                 const std::string& stage) {
    if (text == "actual") return labeling::TimestampSource::kActual;
    if (text == "commanded") return labeling::TimestampSource::kCommanded;
    throw IothError(stage, "timestamp source must be 'actual' or 'commanded', got '" + text +
                               "'");
}

actuation::DeviationModel::Mode parse_deviation_mode(const std::string& text,
                                                     const std::string& stage) {
    if (text == "accumulating") return actuation::DeviationModel::Mode::kAccumulating;
    if (text == "independent") return actuation::DeviationModel::Mode::kIndependent;
    throw IothError(stage, "deviation mode must be 'accumulating' or 'independent', got '" +
                               text + "'");
}

// ---- stage cores -----------------------------------------------------------
// Each subcommand delegates to one of these; the pipeline command calls the
// same functions with the same file boundaries, which is what makes a
// pipeline run equal to running the stages by hand.

struct SequenceArgs {
    std::string layout_path;
    std::string out_path;
    std::uint64_t seed = 0;
    double delay_s = 10.0;
    int iterations = 1;
    double repeat_prob = 0.0;
    double jitter_s = 0.0;
    int training = 0;  // >0: block design with this many presses per button
    bool allow_large = false;
};

void run_sequence(const SequenceArgs& a) {
    const auto layout = kinematics::load_layout(a.layout_path);
    std::vector<int> buttons;
    for (const auto& b : layout.buttons) buttons.push_back(b.button_id);

    sequencer::InteractionSchedule schedule;
    if (a.training > 0) {
        schedule = sequencer::training_schedule(buttons, a.training, a.delay_s);
    } else {
        const auto sequences = sequencer::permutations(buttons, a.allow_large);
        sequencer::Randomization rnd;
        rnd.repeat_probability = a.repeat_prob;
        rnd.delay_jitter_max_s = a.jitter_s;
        rnd.iterations = a.iterations;
        schedule = sequencer::build_schedule(sequences, a.delay_s, rnd, a.seed);
    }
    sequencer::save_schedule_csv(a.out_path, schedule);
    std::cout << "scheduled " << schedule.presses.size() << " presses of " << buttons.size()
              << " buttons -> " << a.out_path << "\n";
}

struct SimulateArgs {
    std::string schedule_path;
    std::string layout_path;
    std::string profile;
    std::string out_pcap;
    std::string out_press_log;
    std::uint64_t seed = 0;
    double latency_s = 0.05;
    double signal_strength = 1.0;
    double deviation_bound_m = 0.002;
    std::string deviation_mode = "accumulating";
    int recalibrate_every = 0;
    double press_offset_s = 0.0;
    double capture_start_s = 0.0;
    double capture_end_s = -1.0;  // <0: last press + 15 s
};

void run_simulate(const SimulateArgs& a) {
    auto schedule = sequencer::load_schedule_csv(a.schedule_path);
    if (a.press_offset_s != 0.0) {
        for (auto& p : schedule.presses) p.scheduled_time_s += a.press_offset_s;
    }
    const auto layout = kinematics::load_layout(a.layout_path);
    const auto surfaces = actuation::surfaces_from_layout(layout);

    actuation::DeviationModel deviation;
    deviation.per_move_bound_m = a.deviation_bound_m;
    deviation.mode = parse_deviation_mode(a.deviation_mode, "simulate");
    deviation.recalibrate_every = a.recalibrate_every;

    const auto log = actuation::execute(schedule, surfaces, deviation, a.latency_s,
                                        derive_seed(a.seed, kActuationStream));

    double end = a.capture_end_s;
    if (end < 0.0) {
        double last = a.capture_start_s;
        for (const auto& ev : log.events) last = std::max(last, ev.actual_time_s);
        end = last + 15.0;
    }
    const auto profile = devicesim::resolve_profile(a.profile, a.signal_strength);
    const auto trace = devicesim::simulate(profile, log, {a.capture_start_s, end},
                                           derive_seed(a.seed, kDeviceStream));

    actuation::save_press_log_csv(a.out_press_log, log);
    netcapture::save_pcap(a.out_pcap, trace);

    long hits = 0;
    for (const auto& ev : log.events) {
        if (ev.outcome == actuation::Outcome::kHit) ++hits;
    }
    std::cout << "simulated " << log.events.size() << " presses (" << hits << " hits), "
              << trace.packets.size() << " packets over [" << csv::format_double(a.capture_start_s)
              << ", " << csv::format_double(end) << ") -> " << a.out_pcap << "\n";
}

struct FilterArgs {
    std::string in_pcap;
    std::string out_pcap;
    std::string mac;      // exactly one of mac / profile is set
    std::string profile;
};

void run_filter(const FilterArgs& a) {
    netcapture::Mac mac{};
    if (!a.mac.empty()) {
        mac = netcapture::parse_mac(a.mac);
    } else {
        mac = devicesim::resolve_profile(a.profile, 1.0).device_mac;
    }
    const auto trace = netcapture::load_pcap(a.in_pcap);
    const auto kept = netcapture::filter_device_tcp(trace, mac);
    netcapture::save_pcap(a.out_pcap, kept);
    std::cout << "kept " << kept.packets.size() << " of " << trace.packets.size()
              << " packets for " << netcapture::mac_to_string(mac) << " -> " << a.out_pcap
              << "\n";
}

struct StatsArgs {
    std::string in_pcap;
    std::string active;
    std::vector<std::string> exclusions;
    std::string out_json;  // empty: text to stdout
    bool json_stdout = false;
};

void run_stats(const StatsArgs& a) {
    const auto trace = netcapture::load_pcap(a.in_pcap);
    const auto active = parse_window(a.active, "stats");
    std::vector<std::pair<double, double>> exclusions;
    for (const auto& e : a.exclusions) exclusions.push_back(parse_window(e, "stats"));
    const auto stats = netcapture::window_stats(trace, active, exclusions);

    json j{{"active_count", stats.active_count},
           {"inactive_count", stats.inactive_count},
           {"excluded_count", stats.excluded_count},
           {"active_duration_s", stats.active_duration_s},
           {"inactive_duration_s", stats.inactive_duration_s},
           {"active_rate", stats.active_rate},
           {"inactive_rate", stats.inactive_rate},
           {"ratio_defined", stats.ratio_defined}};
    if (stats.ratio_defined) j["ratio"] = stats.ratio;
    if (!a.out_json.empty()) save_json_file(a.out_json, j, "stats");

    if (a.json_stdout) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    // Rates are displayed truncated, not rounded: 1202 packets over 533 s is
    // 2.2551..., reported as 2.25. Full precision lives in the JSON output.
    std::cout << "active:   " << stats.active_count << " packets / "
              << fmt_seconds(stats.active_duration_s) << " s = "
              << trunc_fixed(stats.active_rate, 2) << " pkt/s\n";
    std::cout << "inactive: " << stats.inactive_count << " packets / "
              << fmt_seconds(stats.inactive_duration_s) << " s = "
              << trunc_fixed(stats.inactive_rate, 2) << " pkt/s\n";
    std::cout << "excluded: " << stats.excluded_count << " packets\n";
    if (stats.ratio_defined) {
        std::cout << "ratio:    " << trunc_fixed(stats.ratio, 1) << "\n";
    } else {
        std::cout << "ratio:    n/a (inactive rate is 0)\n";
    }
}

struct TimelineArgs {
    std::string in_pcap;
    double bin_s = 1.0;
    std::string out_csv;  // empty: stdout
};

void run_timeline(const TimelineArgs& a) {
    const auto trace = netcapture::load_pcap(a.in_pcap);
    const auto bins = netcapture::timeline_bins(trace, a.bin_s);
    csv::Table t;
    t.header = {"bin_start_s", "count"};
    for (const auto& [start, count] : bins) {
        t.rows.push_back({csv::format_double(start), std::to_string(count)});
    }
    if (a.out_csv.empty()) {
        csv::write_row(std::cout, t.header);
        for (const auto& row : t.rows) csv::write_row(std::cout, row);
    } else {
        csv::write_file(a.out_csv, t, "timeline");
        std::cout << "wrote " << t.rows.size() << " bins -> " << a.out_csv << "\n";
    }
}

struct LabelArgs {
    std::string in_pcap;
    std::string press_log_path;
    std::string out_csv;
    double window_s = 10.0;
    double latency_s = 0.05;
    std::string timestamp_source = "actual";
    bool latest_wins = false;
    bool include_endpoints = false;
};

void run_label(const LabelArgs& a) {
    const auto trace = netcapture::load_pcap(a.in_pcap);
    const auto log = actuation::load_press_log_csv(a.press_log_path, a.latency_s);
    labeling::LabelOptions opts;
    opts.window_s = a.window_s;
    opts.latest_wins = a.latest_wins;
    opts.include_endpoints = a.include_endpoints;
    opts.source = parse_timestamp_source(a.timestamp_source, "label");
    const auto ds = labeling::label(trace, log, opts);
    netcapture::save_dataset_csv(a.out_csv, ds.rows);
    std::cout << "labeled " << ds.rows.size() << " packets (" << ds.unlabeled_count
              << " outside every press window) -> " << a.out_csv << "\n";
}

struct FeaturizeArgs {
    std::string in_pcap;
    std::string out_csv;
    bool include_endpoints = false;
};

void run_featurize(const FeaturizeArgs& a) {
    const auto trace = netcapture::load_pcap(a.in_pcap);
    std::vector<netcapture::FeatureRow> rows;
    rows.reserve(trace.packets.size());
    for (const auto& p : trace.packets) {
        rows.push_back(netcapture::featurize(p, trace.capture_start_s, a.include_endpoints));
    }
    netcapture::save_feature_csv(a.out_csv, rows);
    std::cout << "featurized " << rows.size() << " packets -> " << a.out_csv << "\n";
}

struct TrainArgs {
    std::string data_csv;
    std::string out_model;
    std::string grid_path;  // empty: built-in full grid
    std::string cv_out;     // optional CV table JSON
    int folds = 10;
    std::uint64_t seed = 0;
    int threads = 1;
};

void run_train(const TrainArgs& a) {
    const auto dataset = netcapture::load_dataset_csv(a.data_csv, /*require_labels=*/true);
    const auto rows = learn::rows_from_dataset(dataset);
    if (rows.empty()) throw IothError("train", "no labeled rows in " + a.data_csv);
    const auto grid =
        a.grid_path.empty() ? learn::default_grid() : learn::grid_from_json_file(a.grid_path);

    const auto search = learn::grid_search(rows, grid, a.folds, a.seed, a.threads);
    const auto model =
        learn::fit(rows, search.best, derive_seed(a.seed, kFinalFitStream), a.threads);
    learn::save_model_json(a.out_model, model);

    if (!a.cv_out.empty()) {
        json table = json::array();
        for (const auto& cell : search.table) {
            json row = learn::params_to_json(cell.params);
            row["mean_accuracy"] = cell.mean_accuracy;
            row["mean_macro_precision"] = cell.mean_macro_precision;
            row["mean_macro_recall"] = cell.mean_macro_recall;
            row["mean_macro_f1"] = cell.mean_macro_f1;
            table.push_back(std::move(row));
        }
        save_json_file(a.cv_out, json{{"folds", a.folds}, {"cells", table}}, "train");
    }

    double best_acc = 0.0;
    for (const auto& cell : search.table) {
        if (cell.params.criterion == search.best.criterion &&
            cell.params.max_depth == search.best.max_depth &&
            cell.params.min_samples_split == search.best.min_samples_split &&
            cell.params.n_estimators == search.best.n_estimators) {
            best_acc = cell.mean_accuracy;
        }
    }
    std::cout << "trained on " << rows.size() << " rows; best of " << search.table.size()
              << " combinations: criterion=" << search.best.criterion
              << " max_depth=" << search.best.max_depth
              << " min_samples_split=" << search.best.min_samples_split
              << " n_estimators=" << search.best.n_estimators << " (cv accuracy "
              << trunc_fixed(best_acc, 4) << ") -> " << a.out_model << "\n";
}

struct ReportArgs {
    std::string data_csv;
    std::string grid_path;  // empty: built-in full grid
    std::string out_json;
    int reps = 50;
    double train_fraction = 0.75;
    bool group_split = false;
    int folds = 10;
    std::uint64_t seed = 0;
    int threads = 1;
    json extra;  // merged into the report JSON (pipeline summary)
};

void print_report_table(const learn::RepeatedReport& rep) {
    struct Line {
        const char* name;
        double learn::Metrics::*field;
    };
    static constexpr Line kLines[] = {
        {"accuracy", &learn::Metrics::accuracy},
        {"precision (micro)", &learn::Metrics::micro_precision},
        {"recall (micro)", &learn::Metrics::micro_recall},
        {"f1 (micro)", &learn::Metrics::micro_f1},
        {"precision (macro)", &learn::Metrics::macro_precision},
        {"recall (macro)", &learn::Metrics::macro_recall},
        {"f1 (macro)", &learn::Metrics::macro_f1},
        {"precision (weighted)", &learn::Metrics::weighted_precision},
        {"recall (weighted)", &learn::Metrics::weighted_recall},
        {"f1 (weighted)", &learn::Metrics::weighted_f1},
    };
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-22s %10s %12s\n", "score", "mean", "variance");
    std::cout << buf;
    for (const auto& line : kLines) {
        std::snprintf(buf, sizeof(buf), "%-22s %10.4f %12.3e\n", line.name, rep.mean.*line.field,
                      rep.variance.*line.field);
        std::cout << buf;
    }
}

void run_report(const ReportArgs& a) {
    const auto dataset = netcapture::load_dataset_csv(a.data_csv, /*require_labels=*/true);
    const auto rows = learn::rows_from_dataset(dataset);
    if (rows.empty()) throw IothError("report", "no labeled rows in " + a.data_csv);
    const auto grid =
        a.grid_path.empty() ? learn::default_grid() : learn::grid_from_json_file(a.grid_path);

    const auto rep = learn::repeated_experiment(rows, grid, a.reps, a.train_fraction,
                                                a.group_split, a.folds, a.seed, a.threads);

    json j{{"repetitions", a.reps},
           {"train_fraction", a.train_fraction},
           {"group_split", a.group_split},
           {"folds", a.folds},
           {"seed", a.seed},
           {"rows", rows.size()},
           {"mean", learn::metrics_to_json(rep.mean, false)},
           {"variance", learn::metrics_to_json(rep.variance, false)}};
    json per_rep = json::array();
    for (const auto& r : rep.repetitions) {
        per_rep.push_back(json{{"params", learn::params_to_json(r.chosen)},
                               {"metrics", learn::metrics_to_json(r.metrics)}});
    }
    j["per_repetition"] = std::move(per_rep);
    for (auto it = a.extra.begin(); it != a.extra.end(); ++it) j[it.key()] = it.value();
    if (!a.out_json.empty()) save_json_file(a.out_json, j, "report");

    std::cout << a.reps << " repetitions, " << (a.group_split ? "press-grouped" : "packet-level")
              << " " << csv::format_double(a.train_fraction) << "/"
              << csv::format_double(1.0 - a.train_fraction) << " split, " << rows.size()
              << " rows\n";
    print_report_table(rep);
    if (!a.out_json.empty()) std::cout << "report -> " << a.out_json << "\n";
}

// ---- subcommand registration ------------------------------------------------

void add_plan_ik(CLI::App& app) {
    auto* cmd = app.add_subcommand("plan-ik", "Solve joint angles for every button in a layout");
    auto arm_path = std::make_shared<std::string>();
    auto layout_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--arm", *arm_path, "Arm geometry JSON")->required();
    cmd->add_option("--layout", *layout_path, "Device layout JSON")->required();
    cmd->add_option("--out", *out_path, "Output joint-plan JSON")->required();
    cmd->callback([arm_path, layout_path, out_path] {
        const auto arm = kinematics::load_arm(*arm_path);
        const auto layout = kinematics::load_layout(*layout_path);
        const auto plan = kinematics::plan_device(arm, layout);
        kinematics::save_plan(*out_path, layout.device_name, plan);
        std::cout << "planned " << plan.size() << " buttons for '" << layout.device_name
                  << "'\n";
    });
}

void add_sequence(CLI::App& app) {
    auto* cmd = app.add_subcommand("sequence", "Build a press schedule from a device layout");
    auto a = std::make_shared<SequenceArgs>();
    cmd->add_option("--layout", a->layout_path, "Device layout JSON")->required();
    cmd->add_option("--out", a->out_path, "Output schedule CSV")->required();
    cmd->add_option("--seed", a->seed, "Schedule seed");
    cmd->add_option("--delay", a->delay_s, "Inter-press delay, seconds (default 10)");
    cmd->add_option("--iterations", a->iterations, "Repeat the whole permutation suite N times");
    cmd->add_option("--repeat-prob", a->repeat_prob,
                    "Probability a press is immediately pressed again");
    cmd->add_option("--jitter", a->jitter_s, "Max extra uniform delay, seconds");
    cmd->add_option("--training", a->training,
                    "Block design: N presses per button instead of permutations");
    cmd->add_flag("--allow-large", a->allow_large, "Permit more than 8 buttons (n! sequences)");
    cmd->callback([a] { run_sequence(*a); });
}

void add_export_arm(CLI::App& app) {
    auto* cmd = app.add_subcommand("export-arm", "Render a schedule + joint plan as an arm "
                                                 "command script");
    auto schedule_path = std::make_shared<std::string>();
    auto plan_path = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto delay = std::make_shared<double>(10.0);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto latency = std::make_shared<double>(0.05);
    cmd->add_option("--schedule", *schedule_path, "Schedule CSV")->required();
    cmd->add_option("--plan", *plan_path, "Joint-plan JSON from plan-ik")->required();
    cmd->add_option("--out", *out_path, "Output script path")->required();
    // the schedule CSV carries press times only, so dwell and seed are flags
    cmd->add_option("--delay", *delay, "Dwell between moves, seconds (default 10)");
    cmd->add_option("--seed", *seed, "Seed recorded in the script header");
    cmd->add_option("--latency", *latency, "Command latency recorded in the header, seconds");
    cmd->callback([schedule_path, plan_path, out_path, delay, seed, latency] {
        auto schedule = sequencer::load_schedule_csv(*schedule_path);
        schedule.inter_press_delay_s = *delay;
        schedule.seed = *seed;
        const auto plan = kinematics::load_plan(*plan_path);
        const auto plan_doc = load_json_file(*plan_path, "export-arm");
        const auto device = json_or<std::string>(plan_doc, "device_name", "device");
        const auto script = actuation::export_command_script(schedule, plan, *latency, device);
        std::ofstream out(*out_path);
        if (!out) throw IothError("export-arm", "cannot write " + *out_path);
        out << script;
        if (!out) throw IothError("export-arm", "write failed for " + *out_path);
        std::cout << "wrote " << schedule.presses.size() << " moves -> " << *out_path << "\n";
    });
}

void add_simulate(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate", "Run the virtual arm + device over a schedule "
                                               "and capture the traffic");
    auto a = std::make_shared<SimulateArgs>();
    cmd->add_option("--schedule", a->schedule_path, "Schedule CSV")->required();
    cmd->add_option("--layout", a->layout_path, "Device layout JSON (button surfaces)")
        ->required();
    cmd->add_option("--profile", a->profile, "Device profile: builtin name or JSON path")
        ->required();
    cmd->add_option("--out", a->out_pcap, "Output PCAP")->required();
    cmd->add_option("--press-log", a->out_press_log, "Output press-log CSV")->required();
    cmd->add_option("--seed", a->seed, "Master seed (actuation + device draws derive from it)");
    cmd->add_option("--latency", a->latency_s, "Fixed command latency, seconds (default 0.05)");
    cmd->add_option("--signal-strength", a->signal_strength,
                    "Per-button signature separation in [0,1] (default 1)");
    cmd->add_option("--deviation-bound", a->deviation_bound_m,
                    "Per-move deviation bound, meters (default 0.002)");
    cmd->add_option("--deviation-mode", a->deviation_mode, "accumulating | independent");
    cmd->add_option("--recalibrate-every", a->recalibrate_every,
                    "Presses between recalibrations (0 = never)");
    cmd->add_option("--press-offset", a->press_offset_s,
                    "Shift all scheduled press times by this many seconds");
    cmd->add_option("--capture-start", a->capture_start_s, "Capture window start, seconds");
    cmd->add_option("--capture-end", a->capture_end_s,
                    "Capture window end, seconds (default: last press + 15)");
    cmd->callback([a] { run_simulate(*a); });
}

void add_filter(CLI::App& app) {
    auto* cmd = app.add_subcommand("filter", "Keep only the device's TCP packets");
    auto a = std::make_shared<FilterArgs>();
    cmd->add_option("--in", a->in_pcap, "Input PCAP")->required();
    cmd->add_option("--out", a->out_pcap, "Output PCAP")->required();
    auto* which = cmd->add_option_group("device", "device address source");
    which->add_option("--mac", a->mac, "Device MAC, aa:bb:cc:dd:ee:ff");
    which->add_option("--profile", a->profile, "Take the MAC from this profile (name or path)");
    which->require_option(1);
    cmd->callback([a] { run_filter(*a); });
}

void add_stats(CLI::App& app) {
    auto* cmd = app.add_subcommand("stats", "Packet rates inside vs outside the active window");
    auto a = std::make_shared<StatsArgs>();
    cmd->add_option("--in", a->in_pcap, "Input PCAP")->required();
    cmd->add_option("--active", a->active, "Active window, <start>:<end> seconds")->required();
    cmd->add_option("--exclude", a->exclusions,
                    "Window to drop from both sides, <start>:<end> (repeatable)");
    cmd->add_option("--out", a->out_json, "Write full-precision stats JSON here");
    cmd->add_flag("--json", a->json_stdout, "Print JSON to stdout instead of text");
    cmd->callback([a] { run_stats(*a); });
}

void add_timeline(CLI::App& app) {
    auto* cmd = app.add_subcommand("timeline", "Per-bin packet counts over the capture");
    auto a = std::make_shared<TimelineArgs>();
    cmd->add_option("--in", a->in_pcap, "Input PCAP")->required();
    cmd->add_option("--bin", a->bin_s, "Bin width, seconds (default 1)");
    cmd->add_option("--out", a->out_csv, "Output CSV (default: stdout)");
    cmd->callback([a] { run_timeline(*a); });
}

void add_label(CLI::App& app) {
    auto* cmd = app.add_subcommand("label", "Attribute packets to presses and emit a dataset");
    auto a = std::make_shared<LabelArgs>();
    cmd->add_option("--in", a->in_pcap, "Input PCAP (filtered)")->required();
    cmd->add_option("--press-log", a->press_log_path, "Press-log CSV")->required();
    cmd->add_option("--out", a->out_csv, "Output dataset CSV")->required();
    cmd->add_option("--window", a->window_s, "Attribution window, seconds (default 10)");
    cmd->add_option("--latency", a->latency_s,
                    "Command latency used to reconstruct commanded times (default 0.05)");
    cmd->add_option("--timestamp-source", a->timestamp_source,
                    "Window anchor: actual | commanded (default actual)");
    cmd->add_flag("--latest-wins", a->latest_wins,
                  "Resolve overlapping windows by the latest press instead of failing");
    cmd->add_flag("--include-endpoints", a->include_endpoints,
                  "Keep IP addresses and ports in the features");
    cmd->callback([a] { run_label(*a); });
}

void add_featurize(CLI::App& app) {
    auto* cmd = app.add_subcommand("featurize", "Expand packets into header-bit feature rows");
    auto a = std::make_shared<FeaturizeArgs>();
    cmd->add_option("--in", a->in_pcap, "Input PCAP (filtered)")->required();
    cmd->add_option("--out", a->out_csv, "Output feature CSV")->required();
    cmd->add_flag("--include-endpoints", a->include_endpoints,
                  "Keep IP addresses and ports in the features");
    cmd->callback([a] { run_featurize(*a); });
}

void add_train(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Grid-search + fit a forest on a labeled dataset");
    auto a = std::make_shared<TrainArgs>();
    cmd->add_option("--data", a->data_csv, "Labeled dataset CSV")->required();
    cmd->add_option("--out", a->out_model, "Output model JSON")->required();
    cmd->add_option("--grid", a->grid_path, "Grid JSON (default: built-in 54-combination grid)");
    cmd->add_option("--cv-out", a->cv_out, "Write the per-combination CV table JSON here");
    cmd->add_option("--folds", a->folds, "Cross-validation folds over presses (default 10)");
    cmd->add_option("--seed", a->seed, "Training seed");
    cmd->add_option("--threads", a->threads, "Worker threads for tree training (default 1)");
    cmd->callback([a] { run_train(*a); });
}

void add_report(CLI::App& app) {
    auto* cmd = app.add_subcommand("report", "Repeated split/search/fit/score experiment");
    auto a = std::make_shared<ReportArgs>();
    cmd->add_option("--data", a->data_csv, "Labeled dataset CSV")->required();
    cmd->add_option("--grid", a->grid_path, "Grid JSON (default: built-in 54-combination grid)");
    cmd->add_option("--out", a->out_json, "Output report JSON");
    cmd->add_option("--reps", a->reps, "Repetitions (default 50)");
    cmd->add_option("--train-fraction", a->train_fraction, "Train share (default 0.75)");
    cmd->add_flag("--group-split", a->group_split,
                  "Split by press groups instead of individual packets");
    cmd->add_option("--folds", a->folds, "Inner CV folds (default 10)");
    cmd->add_option("--seed", a->seed, "Master seed");
    cmd->add_option("--threads", a->threads, "Worker threads for tree training (default 1)");
    cmd->callback([a] { run_report(*a); });
}

void add_pipeline(CLI::App& app) {
    auto* cmd = app.add_subcommand("pipeline", "sequence -> simulate -> filter -> label -> "
                                               "train -> report from one config");
    auto config_path = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    cmd->add_option("--config", *config_path, "Pipeline config JSON")->required();
    cmd->add_option("--out-dir", *out_dir, "Directory for all stage outputs")->required();
    cmd->callback([config_path, out_dir] {
        const json cfg = load_json_file(*config_path, "pipeline");
        std::error_code ec;
        std::filesystem::create_directories(*out_dir, ec);
        if (ec) throw IothError("pipeline", "cannot create " + *out_dir + ": " + ec.message());
        const auto path = [&](const char* name) { return *out_dir + "/" + name; };
        // file references inside the config resolve against the config's own
        // directory, so a pipeline run does not depend on the caller's cwd
        const auto cfg_dir = std::filesystem::path(*config_path).parent_path();
        const auto resolve = [&](const std::string& p) {
            if (p.empty() || std::filesystem::path(p).is_absolute() || cfg_dir.empty()) return p;
            return (cfg_dir / p).string();
        };

        const auto seed = json_or<std::uint64_t>(cfg, "seed", 0);
        const auto latency = json_or<double>(cfg, "latency_s", 0.05);
        const auto window = json_or<double>(cfg, "window_s", 10.0);
        const auto threads = json_or<int>(cfg, "threads", 1);

        SequenceArgs seq;
        seq.layout_path = resolve(json_require<std::string>(cfg, "layout", "pipeline"));
        seq.out_path = path("schedule.csv");
        seq.seed = seed;
        seq.delay_s = json_or<double>(cfg, "delay_s", 10.0);
        seq.iterations = json_or<int>(cfg, "iterations", 1);
        seq.repeat_prob = json_or<double>(cfg, "repeat_prob", 0.0);
        seq.jitter_s = json_or<double>(cfg, "jitter_s", 0.0);
        seq.training = json_or<int>(cfg, "training", 0);
        seq.allow_large = json_or<bool>(cfg, "allow_large", false);
        run_sequence(seq);

        SimulateArgs sim;
        sim.schedule_path = seq.out_path;
        sim.layout_path = seq.layout_path;
        sim.profile = json_require<std::string>(cfg, "profile", "pipeline");
        sim.out_pcap = path("trace.pcap");
        sim.out_press_log = path("press_log.csv");
        sim.seed = seed;
        sim.latency_s = latency;
        sim.signal_strength = json_or<double>(cfg, "signal_strength", 1.0);
        sim.press_offset_s = json_or<double>(cfg, "press_offset_s", 0.0);
        sim.capture_start_s = json_or<double>(cfg, "capture_start_s", 0.0);
        sim.capture_end_s = json_or<double>(cfg, "capture_end_s", -1.0);
        if (cfg.contains("deviation")) {
            const json& dev = cfg.at("deviation");
            sim.deviation_bound_m = json_or<double>(dev, "bound_m", 0.002);
            sim.deviation_mode = json_or<std::string>(dev, "mode", "accumulating");
            sim.recalibrate_every = json_or<int>(dev, "recalibrate_every", 0);
        }
        run_simulate(sim);

        FilterArgs filt;
        filt.in_pcap = sim.out_pcap;
        filt.out_pcap = path("filtered.pcap");
        filt.profile = sim.profile;
        run_filter(filt);

        LabelArgs lab;
        lab.in_pcap = filt.out_pcap;
        lab.press_log_path = sim.out_press_log;
        lab.out_csv = path("dataset.csv");
        lab.window_s = window;
        lab.latency_s = latency;
        lab.timestamp_source = json_or<std::string>(cfg, "timestamp_source", "actual");
        lab.latest_wins = json_or<bool>(cfg, "latest_wins", false);
        lab.include_endpoints = json_or<bool>(cfg, "include_endpoints", false);
        run_label(lab);

        std::string grid_path;
        if (cfg.contains("grid_file")) {
            grid_path = resolve(json_require<std::string>(cfg, "grid_file", "pipeline"));
        } else if (cfg.contains("grid")) {
            // inline grid: materialize it so train/report read the same file
            // a by-hand run would pass via --grid
            grid_path = path("grid.json");
            save_json_file(grid_path, cfg.at("grid"), "pipeline");
        }

        TrainArgs train;
        train.data_csv = lab.out_csv;
        train.out_model = path("model.json");
        train.grid_path = grid_path;
        train.cv_out = path("cv_table.json");
        train.folds = json_or<int>(cfg, "folds", 10);
        train.seed = seed;
        train.threads = threads;
        run_train(train);

        // pipeline summary rides along in the report JSON: label coverage and
        // the profile's background rate back the "all packets accounted for"
        // check on burst-only devices.
        const auto filtered = netcapture::load_pcap(filt.out_pcap);
        const auto labeled = netcapture::load_dataset_csv(lab.out_csv, true);
        const auto profile = devicesim::resolve_profile(sim.profile, sim.signal_strength);
        json summary{{"packets_filtered", filtered.packets.size()},
                     {"packets_labeled", labeled.size()},
                     {"label_coverage",
                      filtered.packets.empty()
                          ? 0.0
                          : static_cast<double>(labeled.size()) /
                                static_cast<double>(filtered.packets.size())},
                     {"background_rate_pps", profile.background.rate_pps}};

        ReportArgs rep;
        rep.data_csv = lab.out_csv;
        rep.grid_path = grid_path;
        rep.out_json = path("report.json");
        rep.reps = json_or<int>(cfg, "repetitions", 50);
        rep.train_fraction = json_or<double>(cfg, "train_fraction", 0.75);
        rep.group_split = json_or<bool>(cfg, "group_split", false);
        rep.folds = train.folds;
        rep.seed = seed;
        rep.threads = threads;
        rep.extra = json{{"pipeline", std::move(summary)}};
        run_report(rep);
    });
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"IoT interaction capture toolkit: arm planning, schedules, synthetic "
                 "traffic, labeling, and classification"};
    app.require_subcommand(1);

    add_plan_ik(app);
    add_sequence(app);
    add_export_arm(app);
    add_simulate(app);
    add_filter(app);
    add_stats(app);
    add_timeline(app);
    add_label(app);
    add_featurize(app);
    add_train(app);
    add_report(app);
    add_pipeline(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // CLI11 returns 0 for --help; map real parse failures to exit 2.
        const int code = app.exit(e);
        if (code == 0) return 0;
        std::cerr << app.help();
        return 2;
    } catch (const IothError& e) {
        std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error [internal]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace ioth::cli
