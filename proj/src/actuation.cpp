#include "ioth/actuation.hpp"

#include <cmath>
#include <sstream>

#include "ioth/csv.hpp"
#include "ioth/errors.hpp"
#include "ioth/rng.hpp"

namespace ioth::actuation {

std::int64_t to_micros(double seconds) {
    return std::llround(seconds * 1e6);
}

double from_micros(std::int64_t micros) {
    return static_cast<double>(micros) * 1e-6;
}

ActuationLog execute(const sequencer::InteractionSchedule& schedule,
                     const std::vector<ButtonSurface>& surfaces,
                     const DeviationModel& deviation, double latency_s,
                     std::uint64_t seed) {
    if (deviation.per_move_bound_m < 0.0) {
        throw IothError("actuate", "deviation bound must be >= 0");
    }
    if (deviation.recalibrate_every < 0) {
        throw IothError("actuate", "recalibrate_every must be >= 0");
    }
    std::map<int, ButtonSurface> by_id;
    for (const auto& s : surfaces) {
        if (!(s.half_width_m > 0.0) || !(s.half_height_m > 0.0)) {
            throw IothError("actuate", "button surface half-dimensions must be > 0");
        }
        by_id[s.button_id] = s;
    }

    ActuationLog log;
    log.latency_s = latency_s;
    const std::int64_t latency_us = to_micros(latency_s);

    Rng rng(seed);
    double sum_x = 0.0, sum_y = 0.0;
    int presses_since_recal = 0;

    for (const auto& press : schedule.presses) {
        const auto it = by_id.find(press.button_id);
        if (it == by_id.end()) {
            throw IothError("actuate", "schedule references button " +
                                           std::to_string(press.button_id) +
                                           " with no surface");
        }
        if (deviation.recalibrate_every > 0 &&
            presses_since_recal == deviation.recalibrate_every) {
            sum_x = sum_y = 0.0;
            presses_since_recal = 0;
        }

        const double b = deviation.per_move_bound_m;
        const double dx = b > 0.0 ? rng.uniform(-b, b) : 0.0;
        const double dy = b > 0.0 ? rng.uniform(-b, b) : 0.0;
        sum_x += dx;
        sum_y += dy;
        ++presses_since_recal;

        const bool accumulating = deviation.mode == DeviationModel::Mode::kAccumulating;
        const double ox = accumulating ? sum_x : dx;
        const double oy = accumulating ? sum_y : dy;

        PressEvent ev;
        ev.press_index = press.press_index;
        ev.button_id = press.button_id;
        const std::int64_t commanded_us = to_micros(press.scheduled_time_s);
        ev.commanded_time_s = from_micros(commanded_us);
        ev.actual_time_s = from_micros(commanded_us + latency_us);
        ev.dx_m = ox;
        ev.dy_m = oy;
        const ButtonSurface& pad = it->second;
        ev.outcome = (std::abs(ox) <= pad.half_width_m && std::abs(oy) <= pad.half_height_m)
                         ? Outcome::kHit
                         : Outcome::kMiss;
        log.events.push_back(ev);
    }
    return log;
}

std::string export_command_script(const sequencer::InteractionSchedule& schedule,
                                  const std::map<int, kinematics::JointConfig>& joint_plan,
                                  double latency_s, const std::string& device_name) {
    const long dwell_ms = std::lround(schedule.inter_press_delay_s * 1000.0);
    const long latency_ms = std::lround(latency_s * 1000.0);
    std::ostringstream out;
    out << "# arm-script device=" << device_name << " seed=" << schedule.seed
        << " latency_ms=" << latency_ms << "\n";
    for (const auto& press : schedule.presses) {
        const auto it = joint_plan.find(press.button_id);
        if (it == joint_plan.end()) {
            throw IothError("export-arm", "no joint plan for button " +
                                              std::to_string(press.button_id));
        }
        const auto& j = it->second;
        out << "MOVE " << std::lround(j.base_deg) << " " << std::lround(j.shoulder_deg)
            << " " << std::lround(j.elbow_deg) << " " << std::lround(j.wrist_deg)
            << " DWELL " << dwell_ms << "\n";
    }
    return out.str();
}

ParsedScript parse_command_script(const std::string& text) {
    ParsedScript script;
    std::istringstream in(text);
    std::string line;
    bool saw_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            // header: # arm-script device=<name> seed=<u64> latency_ms=<ms>
            std::istringstream hs(line.substr(1));
            std::string tok;
            while (hs >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const std::string val = tok.substr(eq + 1);
                if (key == "device") script.device_name = val;
                else if (key == "seed") script.seed = std::stoull(val);
                else if (key == "latency_ms") script.latency_ms = std::stol(val);
            }
            saw_header = true;
            continue;
        }
        std::istringstream ls(line);
        std::string kw_move, kw_dwell;
        MoveCommand mv;
        if (!(ls >> kw_move >> mv.base_deg >> mv.shoulder_deg >> mv.elbow_deg >>
              mv.wrist_deg >> kw_dwell >> mv.dwell_ms) ||
            kw_move != "MOVE" || kw_dwell != "DWELL") {
            throw IothError("export-arm", "malformed script line: " + line);
        }
        script.moves.push_back(mv);
    }
    if (!saw_header) throw IothError("export-arm", "script missing header line");
    return script;
}

std::vector<ButtonSurface> surfaces_from_layout(const kinematics::DeviceLayout& layout) {
    std::vector<ButtonSurface> out;
    for (const auto& b : layout.buttons) {
        out.push_back({b.button_id, b.half_width_m, b.half_height_m});
    }
    return out;
}

void save_press_log_csv(const std::string& path, const ActuationLog& log) {
    csv::Table t;
    t.header = {"press_index", "button_id", "actual_time_s", "outcome", "dx_m", "dy_m"};
    for (const auto& ev : log.events) {
        t.rows.push_back({std::to_string(ev.press_index), std::to_string(ev.button_id),
                          csv::format_double(ev.actual_time_s),
                          ev.outcome == Outcome::kHit ? "hit" : "miss",
                          csv::format_double(ev.dx_m), csv::format_double(ev.dy_m)});
    }
    csv::write_file(path, t, "actuate");
}

ActuationLog load_press_log_csv(const std::string& path, double latency_s) {
    const auto t = csv::read_file(path, "press-log");
    const auto ci = t.col("press_index", "press-log");
    const auto cb = t.col("button_id", "press-log");
    const auto ct = t.col("actual_time_s", "press-log");
    const auto co = t.col("outcome", "press-log");
    const auto cx = t.col("dx_m", "press-log");
    const auto cy = t.col("dy_m", "press-log");
    ActuationLog log;
    log.latency_s = latency_s;
    for (const auto& row : t.rows) {
        PressEvent ev;
        ev.press_index = static_cast<int>(csv::parse_int(row[ci], "press-log"));
        ev.button_id = static_cast<int>(csv::parse_int(row[cb], "press-log"));
        ev.actual_time_s = csv::parse_double(row[ct], "press-log");
        ev.commanded_time_s = from_micros(to_micros(ev.actual_time_s) - to_micros(latency_s));
        if (row[co] == "hit") {
            ev.outcome = Outcome::kHit;
        } else if (row[co] == "miss") {
            ev.outcome = Outcome::kMiss;
        } else {
            throw IothError("press-log", "bad outcome '" + row[co] + "'");
        }
        ev.dx_m = csv::parse_double(row[cx], "press-log");
        ev.dy_m = csv::parse_double(row[cy], "press-log");
        log.events.push_back(ev);
    }
    return log;
}

}  // namespace ioth::actuation
