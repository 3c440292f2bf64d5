#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "ioth/errors.hpp"

namespace ioth::kinematics {

// Inclusive limit on a joint's normalized angle. Angles are normalized into
// [0, 360) before the check; hi = 360 admits the full circle (normalized
// angles never reach 360, so no out-of-range value becomes admissible).
struct JointLimit {
    double lo_deg = 0.0;
    double hi_deg = 360.0;
};

struct ArmModel {
    // shoulder->elbow, elbow->wrist, wrist->end-effector, meters.
    std::array<double, 3> link_lengths_m;
    // base, shoulder, elbow, wrist.
    std::array<JointLimit, 4> joint_limits;
};

struct ButtonTarget {
    int button_id = 0;
    double base_rotation_deg = 0.0;
    double x_m = 0.0;
    double y_m = 0.0;
    // Orientation of the final link at contact; 270 = pressing straight down.
    double approach_deg = 270.0;
    // Contact pad half-dimensions, used by the actuation simulator.
    double half_width_m = 0.004;
    double half_height_m = 0.004;
};

struct JointConfig {
    double base_deg = 0.0;
    double shoulder_deg = 0.0;
    double elbow_deg = 0.0;
    double wrist_deg = 0.0;
};

struct PlanarPose {
    double x_m = 0.0;
    double y_m = 0.0;
    double base_deg = 0.0;
};

struct DeviceLayout {
    std::string device_name;
    std::vector<ButtonTarget> buttons;
};

class UnreachableError : public IothError {
public:
    UnreachableError(const std::string& msg, double shortfall)
        : IothError("kinematics", msg), shortfall_m(shortfall) {}
    double shortfall_m;
};

class LimitViolationError : public IothError {
public:
    LimitViolationError(const std::string& msg, std::string joint)
        : IothError("kinematics", msg), joint_name(std::move(joint)) {}
    std::string joint_name;
};

class NoFeasiblePoseError : public IothError {
public:
    explicit NoFeasiblePoseError(const std::string& msg) : IothError("kinematics", msg) {}
};

// Normalizes an angle into [0, 360).
double normalize_deg(double deg);

void validate_model(const ArmModel& model);

// Chains the three planar links at cumulative angles and applies the base
// rotation passthrough. Throws LimitViolationError naming the first joint
// outside its limit.
PlanarPose forward_kinematics(const ArmModel& model, const JointConfig& joints);

// Analytic planar IK. The approach angle fixes the final link, reducing the
// problem to a two-link solve on the wrist point; of the two elbow branches
// the one whose elbow sits higher (elbow-up) is preferred, falling back to
// the other branch if it violates joint limits.
JointConfig solve_planar_ik(const ArmModel& model, const ButtonTarget& target);

// Solves every button; any failure aborts with the button named.
std::map<int, JointConfig> plan_device(const ArmModel& model, const DeviceLayout& layout);

// Layout JSON: {device_name, buttons: [{id, base_rotation_deg, x_m, y_m,
// approach_deg, ...}]}. approach_deg defaults to 270 (straight down).
DeviceLayout load_layout(const std::string& path);

// Arm JSON: {link_lengths_m: [l1,l2,l3], joint_limits_deg: {base: [lo,hi], ...}}.
// Missing limits default to the full circle.
ArmModel load_arm(const std::string& path);

// Joint plan JSON round-trip, for the plan-ik CLI output.
void save_plan(const std::string& path, const std::string& device_name,
               const std::map<int, JointConfig>& plan);
std::map<int, JointConfig> load_plan(const std::string& path);

}  // namespace ioth::kinematics
