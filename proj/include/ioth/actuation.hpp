#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ioth/kinematics.hpp"
#include "ioth/sequencer.hpp"

namespace ioth::actuation {

enum class Outcome { kHit, kMiss };

struct DeviationModel {
    enum class Mode { kAccumulating, kIndependent };
    double per_move_bound_m = 0.002;  // +-2mm per movement
    Mode mode = Mode::kAccumulating;
    int recalibrate_every = 0;  // presses between offset resets; 0 = never
};

struct ButtonSurface {
    int button_id = 0;
    double half_width_m = 0.004;
    double half_height_m = 0.004;
};

struct PressEvent {
    int press_index = 0;
    int button_id = 0;
    double commanded_time_s = 0.0;
    double actual_time_s = 0.0;  // commanded + fixed latency
    Outcome outcome = Outcome::kHit;
    double dx_m = 0.0;  // end-effector offset at contact
    double dy_m = 0.0;
};

struct ActuationLog {
    std::vector<PressEvent> events;
    double latency_s = 0.05;
};

// Times are quantized to integer microseconds (the trace precision used
// throughout), which keeps actual = commanded + latency exact.
std::int64_t to_micros(double seconds);
double from_micros(std::int64_t micros);

// Simulates the arm running the schedule. Each movement draws an (dx, dy)
// deviation uniform in [-bound, +bound] per axis; accumulating mode applies
// the running sum since the last recalibration, independent mode the fresh
// draw. A press hits iff the offset lies within the button's contact pad.
ActuationLog execute(const sequencer::InteractionSchedule& schedule,
                     const std::vector<ButtonSurface>& surfaces,
                     const DeviationModel& deviation, double latency_s,
                     std::uint64_t seed);

// One MOVE line per press with integer-rounded angles, dwell = inter-press
// delay; header records device name, schedule seed, and command latency.
std::string export_command_script(const sequencer::InteractionSchedule& schedule,
                                  const std::map<int, kinematics::JointConfig>& joint_plan,
                                  double latency_s, const std::string& device_name);

struct MoveCommand {
    long base_deg = 0;
    long shoulder_deg = 0;
    long elbow_deg = 0;
    long wrist_deg = 0;
    long dwell_ms = 0;
};

struct ParsedScript {
    std::string device_name;
    std::uint64_t seed = 0;
    long latency_ms = 0;
    std::vector<MoveCommand> moves;
};

// Parser for the exported script; serves as the round-trip oracle and as the
// entry point for replaying a script on real hardware tooling.
ParsedScript parse_command_script(const std::string& text);

std::vector<ButtonSurface> surfaces_from_layout(const kinematics::DeviceLayout& layout);

// CSV: press_index,button_id,actual_time_s,outcome,dx_m,dy_m
void save_press_log_csv(const std::string& path, const ActuationLog& log);
ActuationLog load_press_log_csv(const std::string& path, double latency_s = 0.05);

}  // namespace ioth::actuation
