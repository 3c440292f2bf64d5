#include "ioth/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "ioth/json_util.hpp"

namespace ioth::kinematics {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double to_rad(double deg) { return deg * kDegToRad; }

bool within_limit(double deg, const JointLimit& lim) {
    const double a = normalize_deg(deg);
    return a >= lim.lo_deg && a <= lim.hi_deg;
}

const char* kJointNames[4] = {"base", "shoulder", "elbow", "wrist"};

void check_limits(const ArmModel& model, const JointConfig& joints) {
    const double angles[4] = {joints.base_deg, joints.shoulder_deg, joints.elbow_deg,
                              joints.wrist_deg};
    for (int i = 0; i < 4; ++i) {
        if (!within_limit(angles[i], model.joint_limits[i])) {
            std::ostringstream oss;
            oss << "joint '" << kJointNames[i] << "' at " << normalize_deg(angles[i])
                << " deg outside limit [" << model.joint_limits[i].lo_deg << ", "
                << model.joint_limits[i].hi_deg << "]";
            throw LimitViolationError(oss.str(), kJointNames[i]);
        }
    }
}

}  // namespace

double normalize_deg(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    if (r >= 360.0) r = 0.0;  // r += 360 can round up to exactly 360
    return r;
}

void validate_model(const ArmModel& model) {
    for (double len : model.link_lengths_m) {
        if (!(len > 0.0)) throw IothError("kinematics", "link lengths must be > 0");
    }
    for (int i = 0; i < 4; ++i) {
        const JointLimit& lim = model.joint_limits[i];
        if (!(lim.lo_deg >= 0.0 && lim.lo_deg <= lim.hi_deg && lim.hi_deg <= 360.0 &&
              lim.lo_deg < 360.0)) {
            throw IothError("kinematics", std::string("bad joint limit for '") +
                                              kJointNames[i] + "'");
        }
    }
}

PlanarPose forward_kinematics(const ArmModel& model, const JointConfig& joints) {
    check_limits(model, joints);
    const double a1 = joints.shoulder_deg;
    const double a2 = a1 + joints.elbow_deg;
    const double a3 = a2 + joints.wrist_deg;
    PlanarPose pose;
    pose.x_m = model.link_lengths_m[0] * std::cos(to_rad(a1)) +
               model.link_lengths_m[1] * std::cos(to_rad(a2)) +
               model.link_lengths_m[2] * std::cos(to_rad(a3));
    pose.y_m = model.link_lengths_m[0] * std::sin(to_rad(a1)) +
               model.link_lengths_m[1] * std::sin(to_rad(a2)) +
               model.link_lengths_m[2] * std::sin(to_rad(a3));
    pose.base_deg = normalize_deg(joints.base_deg);
    return pose;
}

JointConfig solve_planar_ik(const ArmModel& model, const ButtonTarget& target) {
    validate_model(model);
    const double l1 = model.link_lengths_m[0];
    const double l2 = model.link_lengths_m[1];
    const double l3 = model.link_lengths_m[2];

    // The approach angle fixes the last link, so the wrist joint must land at
    // target - l3 * (cos, sin)(approach).
    const double wx = target.x_m - l3 * std::cos(to_rad(target.approach_deg));
    const double wy = target.y_m - l3 * std::sin(to_rad(target.approach_deg));
    const double r = std::hypot(wx, wy);

    // Reachability is the triangle inequality on the wrist point, exact.
    const double reach_max = l1 + l2;
    const double reach_min = std::abs(l1 - l2);
    if (r > reach_max) {
        std::ostringstream oss;
        oss << "button " << target.button_id << " unreachable: wrist point "
            << (r - reach_max) << " m beyond max reach";
        throw UnreachableError(oss.str(), r - reach_max);
    }
    if (r < reach_min) {
        std::ostringstream oss;
        oss << "button " << target.button_id << " unreachable: wrist point "
            << (reach_min - r) << " m inside min reach";
        throw UnreachableError(oss.str(), reach_min - r);
    }

    // Law of cosines for the interior elbow angle; the clamp only absorbs
    // floating-point spill at the exact-tangency boundary already admitted
    // above.
    double cos_elbow = (r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    cos_elbow = std::clamp(cos_elbow, -1.0, 1.0);
    const double elbow_abs = std::acos(cos_elbow);  // in [0, pi]
    const double phi = std::atan2(wy, wx);
    const double alpha = std::atan2(l2 * std::sin(elbow_abs), l1 + l2 * std::cos(elbow_abs));

    struct Branch {
        double shoulder_rad;
        double elbow_rad;
    };
    // Branch 0 bends the elbow clockwise (negative elbow angle), branch 1
    // counter-clockwise; both place the wrist joint at (wx, wy).
    const Branch branches[2] = {{phi + alpha, -elbow_abs}, {phi - alpha, +elbow_abs}};

    // Elbow-up = the branch whose elbow joint sits strictly higher; on a tie
    // (straight arm) prefer the non-positive elbow angle branch.
    const double ey0 = l1 * std::sin(branches[0].shoulder_rad);
    const double ey1 = l1 * std::sin(branches[1].shoulder_rad);
    int order[2] = {0, 1};
    if (ey1 > ey0) {
        order[0] = 1;
        order[1] = 0;
    }

    std::string last_violation;
    for (int idx : order) {
        const Branch& b = branches[idx];
        JointConfig joints;
        joints.base_deg = normalize_deg(target.base_rotation_deg);
        joints.shoulder_deg = normalize_deg(b.shoulder_rad / kDegToRad);
        joints.elbow_deg = normalize_deg(b.elbow_rad / kDegToRad);
        // Wrist closes the chain to the approach angle in degree arithmetic,
        // so the cumulative angle reproduces approach_deg exactly mod 360.
        joints.wrist_deg =
            normalize_deg(target.approach_deg - joints.shoulder_deg - joints.elbow_deg);
        try {
            check_limits(model, joints);
            return joints;
        } catch (const LimitViolationError& e) {
            last_violation = e.what();
        }
    }
    std::ostringstream oss;
    oss << "button " << target.button_id << ": both elbow branches violate joint limits ("
        << last_violation << ")";
    throw NoFeasiblePoseError(oss.str());
}

std::map<int, JointConfig> plan_device(const ArmModel& model, const DeviceLayout& layout) {
    if (layout.buttons.empty()) throw IothError("kinematics", "empty layout");
    std::set<int> seen;
    for (const auto& b : layout.buttons) {
        if (!seen.insert(b.button_id).second) {
            throw IothError("kinematics",
                            "duplicate button_id " + std::to_string(b.button_id));
        }
    }
    std::map<int, JointConfig> plan;
    for (const auto& b : layout.buttons) {
        try {
            plan[b.button_id] = solve_planar_ik(model, b);
        } catch (const IothError& e) {
            throw IothError("kinematics", "button " + std::to_string(b.button_id) + ": " +
                                              e.what());
        }
    }
    return plan;
}

DeviceLayout load_layout(const std::string& path) {
    const json j = load_json_file(path, "layout");
    DeviceLayout layout;
    layout.device_name = json_require<std::string>(j, "device_name", "layout");
    if (!j.contains("buttons") || !j.at("buttons").is_array()) {
        throw IothError("layout", "missing 'buttons' array");
    }
    for (const auto& jb : j.at("buttons")) {
        ButtonTarget b;
        b.button_id = json_require<int>(jb, "id", "layout");
        if (b.button_id < 1) throw IothError("layout", "button id must be >= 1");
        b.base_rotation_deg = json_require<double>(jb, "base_rotation_deg", "layout");
        b.x_m = json_require<double>(jb, "x_m", "layout");
        b.y_m = json_require<double>(jb, "y_m", "layout");
        b.approach_deg = json_or<double>(jb, "approach_deg", 270.0);
        b.half_width_m = json_or<double>(jb, "half_width_m", 0.004);
        b.half_height_m = json_or<double>(jb, "half_height_m", 0.004);
        layout.buttons.push_back(b);
    }
    return layout;
}

ArmModel load_arm(const std::string& path) {
    const json j = load_json_file(path, "arm");
    ArmModel model;
    const auto lengths = json_require<std::vector<double>>(j, "link_lengths_m", "arm");
    if (lengths.size() != 3) throw IothError("arm", "link_lengths_m must have 3 entries");
    std::copy(lengths.begin(), lengths.end(), model.link_lengths_m.begin());
    if (j.contains("joint_limits_deg")) {
        const json& jl = j.at("joint_limits_deg");
        for (int i = 0; i < 4; ++i) {
            if (!jl.contains(kJointNames[i])) continue;
            const auto pair = jl.at(kJointNames[i]).get<std::vector<double>>();
            if (pair.size() != 2) {
                throw IothError("arm", std::string("joint limit for '") + kJointNames[i] +
                                           "' must be [lo, hi]");
            }
            model.joint_limits[i] = JointLimit{pair[0], pair[1]};
        }
    }
    validate_model(model);
    return model;
}

void save_plan(const std::string& path, const std::string& device_name,
               const std::map<int, JointConfig>& plan) {
    json j;
    j["device_name"] = device_name;
    json arr = json::array();
    for (const auto& [id, cfg] : plan) {
        arr.push_back({{"id", id},
                       {"base_deg", cfg.base_deg},
                       {"shoulder_deg", cfg.shoulder_deg},
                       {"elbow_deg", cfg.elbow_deg},
                       {"wrist_deg", cfg.wrist_deg}});
    }
    j["joints"] = std::move(arr);
    save_json_file(path, j, "plan-ik");
}

std::map<int, JointConfig> load_plan(const std::string& path) {
    const json j = load_json_file(path, "plan");
    std::map<int, JointConfig> plan;
    for (const auto& je : j.at("joints")) {
        JointConfig cfg;
        cfg.base_deg = json_require<double>(je, "base_deg", "plan");
        cfg.shoulder_deg = json_require<double>(je, "shoulder_deg", "plan");
        cfg.elbow_deg = json_require<double>(je, "elbow_deg", "plan");
        cfg.wrist_deg = json_require<double>(je, "wrist_deg", "plan");
        plan[json_require<int>(je, "id", "plan")] = cfg;
    }
    return plan;
}

}  // namespace ioth::kinematics
