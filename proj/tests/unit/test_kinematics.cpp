#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>

#include "ioth/kinematics.hpp"
#include "ioth/rng.hpp"

using namespace ioth::kinematics;

namespace {

ArmModel unit_arm() {
    ArmModel m;
    m.link_lengths_m = {1.0, 1.0, 1.0};
    return m;  // default limits: full circle on every joint
}

double mod360_diff(double a, double b) {
    double d = std::fmod(a - b, 360.0);
    if (d < 0) d += 360.0;
    return std::min(d, 360.0 - d);
}

}  // namespace

TEST_CASE("normalize_deg maps into [0,360)") {
    CHECK(normalize_deg(0.0) == 0.0);
    CHECK(normalize_deg(360.0) == 0.0);
    CHECK(normalize_deg(720.0) == 0.0);
    CHECK(normalize_deg(-90.0) == 270.0);
    CHECK(normalize_deg(450.0) == 90.0);
    CHECK(normalize_deg(-1e-30) < 360.0);  // the +=360 round-up guard
}

TEST_CASE("forward kinematics on the straight and bent unit chain") {
    const ArmModel m = unit_arm();

    JointConfig straight;  // all zero: chain along +x
    auto pose = forward_kinematics(m, straight);
    CHECK(pose.x_m == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(pose.y_m == doctest::Approx(0.0).epsilon(1e-12));

    JointConfig up;
    up.shoulder_deg = 90.0;
    pose = forward_kinematics(m, up);
    CHECK(pose.x_m == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pose.y_m == doctest::Approx(3.0).epsilon(1e-12));

    JointConfig bent;
    bent.shoulder_deg = 90.0;
    bent.elbow_deg = -90.0;
    pose = forward_kinematics(m, bent);
    CHECK(pose.x_m == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(pose.y_m == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward kinematics rejects out-of-limit joints by name") {
    ArmModel m = unit_arm();
    m.joint_limits[2] = {0.0, 180.0};  // elbow
    JointConfig j;
    j.elbow_deg = 200.0;
    CHECK_THROWS_AS(forward_kinematics(m, j), LimitViolationError);
    try {
        forward_kinematics(m, j);
    } catch (const LimitViolationError& e) {
        CHECK(e.joint_name == "elbow");
    }
}

TEST_CASE("ik solves the fully extended target") {
    const ArmModel m = unit_arm();
    ButtonTarget t;
    t.button_id = 1;
    t.x_m = 3.0;
    t.y_m = 0.0;
    t.approach_deg = 0.0;
    const auto j = solve_planar_ik(m, t);
    CHECK(j.shoulder_deg == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(j.elbow_deg == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(j.wrist_deg == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("ik reports the shortfall for an unreachable target") {
    const ArmModel m = unit_arm();
    ButtonTarget t;
    t.button_id = 9;
    t.x_m = 4.0;
    t.y_m = 0.0;
    t.approach_deg = 0.0;
    CHECK_THROWS_AS(solve_planar_ik(m, t), UnreachableError);
    try {
        solve_planar_ik(m, t);
    } catch (const UnreachableError& e) {
        CHECK(e.shortfall_m == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("ik rejects targets inside the minimum reach annulus") {
    ArmModel m;
    m.link_lengths_m = {1.0, 0.4, 0.1};
    ButtonTarget t;
    t.button_id = 2;
    t.x_m = 0.2 + 0.1;  // wrist point lands at distance 0.2 < |l1-l2| = 0.6
    t.y_m = 0.0;
    t.approach_deg = 0.0;
    CHECK_THROWS_AS(solve_planar_ik(m, t), UnreachableError);
    try {
        solve_planar_ik(m, t);
    } catch (const UnreachableError& e) {
        CHECK(e.shortfall_m == doctest::Approx(0.4).epsilon(1e-9));
    }
}

TEST_CASE("fk round-trips ik over random geometries and targets") {
    ioth::Rng rng(20240817);
    constexpr double kPi = std::numbers::pi;
    for (int g = 0; g < 5; ++g) {
        ArmModel m;
        m.link_lengths_m = {rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3),
                            rng.uniform(0.02, 0.2)};
        const double l1 = m.link_lengths_m[0], l2 = m.link_lengths_m[1],
                     l3 = m.link_lengths_m[2];
        for (int i = 0; i < 200; ++i) {
            // Sample a wrist point strictly inside the reachable annulus, then
            // place the target one final-link away along the approach angle.
            const double rlo = std::abs(l1 - l2) * 1.001 + 1e-6;
            const double rhi = (l1 + l2) * 0.999;
            const double r = rng.uniform(rlo, rhi);
            const double psi = rng.uniform(0.0, 2.0 * kPi);
            const double approach = rng.uniform(0.0, 360.0);
            ButtonTarget t;
            t.button_id = 1;
            t.base_rotation_deg = rng.uniform(0.0, 360.0);
            t.x_m = r * std::cos(psi) + l3 * std::cos(approach * kPi / 180.0);
            t.y_m = r * std::sin(psi) + l3 * std::sin(approach * kPi / 180.0);
            t.approach_deg = approach;

            const auto j = solve_planar_ik(m, t);
            const auto pose = forward_kinematics(m, j);
            CHECK(std::abs(pose.x_m - t.x_m) < 1e-9);
            CHECK(std::abs(pose.y_m - t.y_m) < 1e-9);
            const double planar_sum = j.shoulder_deg + j.elbow_deg + j.wrist_deg;
            CHECK(mod360_diff(planar_sum, approach) < 1e-9);
            CHECK(pose.base_deg == doctest::Approx(normalize_deg(t.base_rotation_deg)));
        }
    }
}

TEST_CASE("ik prefers the branch whose elbow sits higher") {
    const ArmModel m = unit_arm();
    ioth::Rng rng(77);
    constexpr double kPi = std::numbers::pi;
    for (int i = 0; i < 100; ++i) {
        const double r = rng.uniform(0.2, 1.95);
        const double psi = rng.uniform(0.0, 2.0 * kPi);
        ButtonTarget t;
        t.button_id = 1;
        t.approach_deg = 270.0;
        t.x_m = r * std::cos(psi);
        t.y_m = r * std::sin(psi) - 1.0;  // wrist point back at r*(cos,sin)

        const auto j = solve_planar_ik(m, t);
        // Reconstruct both candidate shoulder angles and compare elbow heights.
        const double wx = r * std::cos(psi), wy = r * std::sin(psi);
        const double cos_e = std::min(1.0, std::max(-1.0, (r * r - 2.0) / 2.0));
        const double e_abs = std::acos(cos_e);
        const double phi = std::atan2(wy, wx);
        const double alpha = std::atan2(std::sin(e_abs), 1.0 + std::cos(e_abs));
        const double y_up = std::sin(phi + alpha);
        const double y_dn = std::sin(phi - alpha);
        const double expected_shoulder =
            (y_up >= y_dn ? phi + alpha : phi - alpha) * 180.0 / kPi;
        CHECK(mod360_diff(j.shoulder_deg, expected_shoulder) < 1e-6);
    }
}

TEST_CASE("ik falls back to the other elbow branch under joint limits") {
    ArmModel m = unit_arm();
    ButtonTarget t;
    t.button_id = 1;
    t.x_m = 1.2;
    t.y_m = 0.3 - 1.0;
    t.approach_deg = 270.0;  // wrist point (1.2, 0.3)

    const auto unrestricted = solve_planar_ik(m, t);

    // Forbid the returned elbow angle; the solver must produce the mirror
    // branch instead of failing.
    const double banned = unrestricted.elbow_deg;
    if (banned > 180.0) {
        m.joint_limits[2] = {0.0, 180.0};
    } else {
        m.joint_limits[2] = {180.0, 360.0};
    }
    const auto fallback = solve_planar_ik(m, t);
    CHECK(mod360_diff(fallback.elbow_deg, banned) > 1.0);
    const auto pose = forward_kinematics(m, fallback);
    CHECK(std::abs(pose.x_m - t.x_m) < 1e-9);
    CHECK(std::abs(pose.y_m - t.y_m) < 1e-9);

    // Squeeze the limit so neither branch fits.
    m.joint_limits[2] = {179.0, 181.0};
    CHECK_THROWS_AS(solve_planar_ik(m, t), NoFeasiblePoseError);
}

TEST_CASE("plan_device solves all buttons or names the failure") {
    const ArmModel m = unit_arm();
    DeviceLayout layout;
    layout.device_name = "bench";
    for (int i = 1; i <= 4; ++i) {
        ButtonTarget t;
        t.button_id = i;
        t.x_m = 0.5 + 0.2 * i;
        t.y_m = -0.6;
        t.approach_deg = 270.0;
        layout.buttons.push_back(t);
    }
    const auto plan = plan_device(m, layout);
    REQUIRE(plan.size() == 4);
    for (const auto& b : layout.buttons) {
        const auto pose = forward_kinematics(m, plan.at(b.button_id));
        CHECK(std::abs(pose.x_m - b.x_m) < 1e-9);
        CHECK(std::abs(pose.y_m - b.y_m) < 1e-9);
    }

    DeviceLayout empty;
    empty.device_name = "none";
    CHECK_THROWS_AS(plan_device(m, empty), ioth::IothError);

    DeviceLayout bad = layout;
    bad.buttons[2].x_m = 50.0;
    try {
        plan_device(m, bad);
        FAIL("expected error");
    } catch (const ioth::IothError& e) {
        CHECK(std::string(e.what()).find("button 3") != std::string::npos);
    }

    DeviceLayout dup = layout;
    dup.buttons[1].button_id = 1;
    CHECK_THROWS_AS(plan_device(m, dup), ioth::IothError);
}

TEST_CASE("layout and arm json files load with defaults applied") {
    const std::string layout_path = "test_layout_tmp.json";
    {
        std::ofstream out(layout_path);
        out << R"({"device_name":"thermo","buttons":[
                {"id":1,"base_rotation_deg":10,"x_m":0.2,"y_m":0.1,"approach_deg":180},
                {"id":2,"base_rotation_deg":20,"x_m":0.25,"y_m":0.1}]})";
    }
    const auto layout = load_layout(layout_path);
    CHECK(layout.device_name == "thermo");
    REQUIRE(layout.buttons.size() == 2);
    CHECK(layout.buttons[0].approach_deg == 180.0);
    CHECK(layout.buttons[1].approach_deg == 270.0);  // default: press straight down
    CHECK(layout.buttons[1].half_width_m == doctest::Approx(0.004));

    const std::string arm_path = "test_arm_tmp.json";
    {
        std::ofstream out(arm_path);
        out << R"({"link_lengths_m":[0.125,0.125,0.195],
                   "joint_limits_deg":{"elbow":[0,355]}})";
    }
    const auto arm = load_arm(arm_path);
    CHECK(arm.link_lengths_m[2] == doctest::Approx(0.195));
    CHECK(arm.joint_limits[2].hi_deg == 355.0);
    CHECK(arm.joint_limits[1].hi_deg == 360.0);  // default untouched

    std::remove(layout_path.c_str());
    std::remove(arm_path.c_str());
}

TEST_CASE("joint plans round-trip through json") {
    const ArmModel m = unit_arm();
    DeviceLayout layout;
    layout.device_name = "rt";
    ButtonTarget t;
    t.button_id = 3;
    t.x_m = 1.1;
    t.y_m = -0.4;
    layout.buttons.push_back(t);
    const auto plan = plan_device(m, layout);

    const std::string path = "test_plan_tmp.json";
    save_plan(path, layout.device_name, plan);
    const auto loaded = load_plan(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded.at(3).shoulder_deg == plan.at(3).shoulder_deg);
    CHECK(loaded.at(3).elbow_deg == plan.at(3).elbow_deg);
    CHECK(loaded.at(3).wrist_deg == plan.at(3).wrist_deg);
    std::remove(path.c_str());
}
