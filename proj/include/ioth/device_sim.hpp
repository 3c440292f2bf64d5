#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ioth/actuation.hpp"
#include "ioth/netcapture.hpp"

namespace ioth::devicesim {

// Per-button response signature. Packet count is either fixed or Poisson;
// payload size draws uniform around the center. All parameters are simulation
// choices, not measurements of any real device.
struct BurstSpec {
    int button_id = 0;
    bool fixed_count = true;
    int count_fixed = 2;
    double poisson_mean = 0.0;
    double response_delay_s = 0.35;
    double inter_packet_gap_s = 0.5;
    std::uint32_t remote_ip = 0;
    std::uint16_t remote_port = 443;
    int payload_center = 400;
    int payload_jitter = 20;
    std::uint8_t ttl = 64;
    std::uint16_t tcp_window = 8192;
    double direction_mix = 0.5;  // fraction device -> cloud
};

struct BackgroundSpec {
    double rate_pps = 0.0;  // homogeneous Poisson over the capture window
    std::vector<std::pair<std::uint32_t, std::uint16_t>> endpoints;
    int payload_center = 160;
    int payload_jitter = 120;
    std::uint8_t ttl = 64;
    std::uint16_t tcp_window = 16384;
};

// One-shot packet train near capture start, standing in for the device's
// startup chatter; stats consumers are expected to exclude it.
struct InitBurstSpec {
    int count = 0;
    double start_s = 0.5;
    double gap_s = 0.06;
};

struct DeviceProfile {
    std::string name;
    netcapture::Mac device_mac{};
    netcapture::Mac gateway_mac{};
    std::uint32_t device_ip = 0;
    std::map<int, BurstSpec> buttons;
    BackgroundSpec background;
    InitBurstSpec init_burst;
};

// Converts hit presses into per-button bursts plus background and init
// traffic. Deterministic under (profile, log, window, seed); per-press packet
// streams are derived from the press index, so editing one press does not
// ripple into the others.
netcapture::Trace simulate(const DeviceProfile& profile, const actuation::ActuationLog& log,
                           std::pair<double, double> capture_window, std::uint64_t seed);

// The two archetypes: a thermostat-like device that is silent when idle and
// answers each press with exactly two packets, and a smart-display-like
// device with Poisson bursts, constant background chatter, and a startup
// burst. signal_strength in [0,1] interpolates the per-button parameters
// from all-identical (0) to fully distinct (1).
DeviceProfile make_sensi_profile(double signal_strength = 1.0);
DeviceProfile make_echo_profile(double signal_strength = 1.0);
std::map<std::string, DeviceProfile> builtin_profiles(double signal_strength = 1.0);

DeviceProfile load_profile_json(const std::string& path);
void save_profile_json(const std::string& path, const DeviceProfile& profile);

// Resolves either a builtin name (sensi_like, echo_show_like) or a JSON path.
DeviceProfile resolve_profile(const std::string& name_or_path, double signal_strength);

}  // namespace ioth::devicesim
