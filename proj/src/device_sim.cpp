#include "ioth/device_sim.hpp"

#include <algorithm>
#include <cmath>

#include "ioth/errors.hpp"
#include "ioth/json_util.hpp"
#include "ioth/rng.hpp"

namespace ioth::devicesim {

namespace {

using netcapture::PacketRecord;
using netcapture::Trace;

// Stream ids for derive_seed: background, init burst, then one per press.
constexpr std::uint64_t kStreamBackground = 1;
constexpr std::uint64_t kStreamInit = 2;
constexpr std::uint64_t kStreamPressBase = 0x1000;

int draw_payload_size(Rng& rng, int center, int jitter) {
    int size = center;
    if (jitter > 0) {
        size += static_cast<int>(rng.uniform_int(static_cast<std::int64_t>(-jitter),
                                                 static_cast<std::int64_t>(jitter)));
    }
    return std::max(0, size);
}

// Assembles one synthetic TCP packet between the device and a remote
// endpoint. IP ident and TCP seq/ack are fresh random draws per packet: the
// virtual device is not a conformant TCP stack, and monotone counters would
// hand the classifier a spurious per-press signal.
PacketRecord make_packet(Rng& rng, const DeviceProfile& profile, std::int64_t ts_us,
                         bool device_to_cloud, std::uint32_t remote_ip,
                         std::uint16_t remote_port, std::uint16_t device_port,
                         int payload_size, std::uint8_t ttl, std::uint16_t tcp_window) {
    PacketRecord p;
    p.ts_us = ts_us;
    p.ethertype = netcapture::kEthertypeIpv4;
    const std::uint16_t ident = static_cast<std::uint16_t>(rng.uniform_int(std::uint64_t{65536}));
    const std::uint32_t seq = static_cast<std::uint32_t>(rng.next_u64());
    const std::uint32_t ack = static_cast<std::uint32_t>(rng.next_u64());
    if (device_to_cloud) {
        p.src_mac = profile.device_mac;
        p.dst_mac = profile.gateway_mac;
        p.tcp_header = netcapture::build_tcp_header(device_port, remote_port, seq, ack,
                                                    0x18, tcp_window);
        p.ipv4_header = netcapture::build_ipv4_header(
            profile.device_ip, remote_ip, ttl, ident,
            static_cast<std::uint16_t>(p.tcp_header.size() + payload_size));
    } else {
        p.src_mac = profile.gateway_mac;
        p.dst_mac = profile.device_mac;
        p.tcp_header = netcapture::build_tcp_header(remote_port, device_port, seq, ack,
                                                    0x18, tcp_window);
        p.ipv4_header = netcapture::build_ipv4_header(
            remote_ip, profile.device_ip, ttl, ident,
            static_cast<std::uint16_t>(p.tcp_header.size() + payload_size));
    }
    p.payload.assign(static_cast<std::size_t>(payload_size), 0x00);
    netcapture::decode_fields(p);
    return p;
}

}  // namespace

Trace simulate(const DeviceProfile& profile, const actuation::ActuationLog& log,
               std::pair<double, double> capture_window, std::uint64_t seed) {
    const auto [start_s, end_s] = capture_window;
    if (!(end_s > start_s)) throw IothError("simulate", "capture window must be non-empty");
    const std::int64_t start_us = actuation::to_micros(start_s);
    const std::int64_t end_us = actuation::to_micros(end_s);

    for (const auto& ev : log.events) {
        if (ev.actual_time_s < start_s || ev.actual_time_s > end_s) {
            throw IothError("simulate", "press " + std::to_string(ev.press_index) +
                                            " at t=" + std::to_string(ev.actual_time_s) +
                                            " lies outside the capture window");
        }
        if (profile.buttons.find(ev.button_id) == profile.buttons.end()) {
            throw IothError("simulate", "profile has no burst entry for button " +
                                            std::to_string(ev.button_id));
        }
    }

    Trace trace;
    trace.capture_start_s = start_s;
    trace.capture_end_s = end_s;

    // Press bursts: only hits produce traffic; a missed press touched nothing.
    for (const auto& ev : log.events) {
        if (ev.outcome != actuation::Outcome::kHit) continue;
        const BurstSpec& burst = profile.buttons.at(ev.button_id);
        Rng rng(derive_seed(seed, kStreamPressBase + static_cast<std::uint64_t>(ev.press_index)));
        int count = burst.count_fixed;
        if (!burst.fixed_count) {
            count = static_cast<int>(rng.poisson(burst.poisson_mean));
        }
        const std::uint16_t device_port =
            static_cast<std::uint16_t>(49152 + rng.uniform_int(std::uint64_t{16384}));
        const std::int64_t press_us = actuation::to_micros(ev.actual_time_s);
        const std::int64_t response_us = actuation::to_micros(burst.response_delay_s);
        const std::int64_t gap_us = actuation::to_micros(burst.inter_packet_gap_s);
        for (int k = 0; k < count; ++k) {
            const std::int64_t ts_us = press_us + response_us + k * gap_us;
            // draws stay in lockstep even for packets clipped at capture end
            const int size = draw_payload_size(rng, burst.payload_center, burst.payload_jitter);
            const bool to_cloud = rng.bernoulli(burst.direction_mix);
            if (ts_us > end_us) continue;
            PacketRecord p = make_packet(rng, profile, ts_us, to_cloud, burst.remote_ip,
                                         burst.remote_port, device_port, size, burst.ttl,
                                         burst.tcp_window);
            p.cause_press_index = ev.press_index;
            trace.packets.push_back(std::move(p));
        }
    }

    // Background chatter: homogeneous Poisson over the whole capture window.
    if (profile.background.rate_pps > 0.0) {
        if (profile.background.endpoints.empty()) {
            throw IothError("simulate", "background rate set but no endpoints given");
        }
        Rng rng(derive_seed(seed, kStreamBackground));
        double t = start_s;
        for (;;) {
            t += rng.exponential(profile.background.rate_pps);
            if (t >= end_s) break;
            const auto& ep = profile.background.endpoints[rng.uniform_int(
                static_cast<std::uint64_t>(profile.background.endpoints.size()))];
            const int size = draw_payload_size(rng, profile.background.payload_center,
                                               profile.background.payload_jitter);
            const bool to_cloud = rng.bernoulli(0.5);
            const std::uint16_t device_port =
                static_cast<std::uint16_t>(49152 + rng.uniform_int(std::uint64_t{16384}));
            trace.packets.push_back(make_packet(rng, profile, actuation::to_micros(t),
                                                to_cloud, ep.first, ep.second, device_port,
                                                size, profile.background.ttl,
                                                profile.background.tcp_window));
        }
    }

    // Startup burst near capture start (smart-display archetype).
    if (profile.init_burst.count > 0) {
        if (profile.background.endpoints.empty()) {
            throw IothError("simulate", "init burst set but no background endpoints given");
        }
        Rng rng(derive_seed(seed, kStreamInit));
        const auto& ep = profile.background.endpoints.front();
        const std::uint16_t device_port =
            static_cast<std::uint16_t>(49152 + rng.uniform_int(std::uint64_t{16384}));
        for (int k = 0; k < profile.init_burst.count; ++k) {
            const double t = start_s + profile.init_burst.start_s + k * profile.init_burst.gap_s;
            const int size = draw_payload_size(rng, profile.background.payload_center,
                                               profile.background.payload_jitter);
            const bool to_cloud = rng.bernoulli(0.5);
            if (t >= end_s) continue;
            trace.packets.push_back(make_packet(rng, profile, actuation::to_micros(t),
                                                to_cloud, ep.first, ep.second, device_port,
                                                size, profile.background.ttl,
                                                profile.background.tcp_window));
        }
    }

    // Deterministic merge: generation order above is fixed, so a stable sort
    // yields one canonical packet order per (inputs, seed).
    std::stable_sort(trace.packets.begin(), trace.packets.end(),
                     [](const PacketRecord& a, const PacketRecord& b) {
                         return a.ts_us < b.ts_us;
                     });
    if (!trace.packets.empty() && trace.packets.front().ts_us < start_us) {
        throw IothError("simulate", "generated packet precedes capture start");
    }
    return trace;
}

namespace {

// value interpolated between the shared center (s=0) and each button's
// distinct value (s=1), rounded to the nearest integer.
long lerp_round(double s, double common, double distinct) {
    return std::lround(common + s * (distinct - common));
}

}  // namespace

DeviceProfile make_sensi_profile(double signal_strength) {
    if (signal_strength < 0.0 || signal_strength > 1.0) {
        throw IothError("profile", "signal_strength must be in [0,1]");
    }
    DeviceProfile p;
    p.name = "sensi_like";
    p.device_mac = netcapture::parse_mac("02:53:45:4e:53:49");
    p.gateway_mac = netcapture::parse_mac("02:47:57:00:00:01");
    p.device_ip = netcapture::parse_ipv4("192.168.1.23");
    const double s = signal_strength;
    const int sizes[4] = {200, 400, 600, 800};
    const int ttls[4] = {32, 64, 128, 192};
    const int windows[4] = {4096, 8192, 16384, 32768};
    const int ports[4] = {8883, 8884, 8885, 8886};
    const int ip_last[4] = {10, 20, 30, 40};
    for (int k = 0; k < 4; ++k) {
        BurstSpec b;
        b.button_id = k + 1;
        b.fixed_count = true;
        b.count_fixed = 2;  // one spike of two packets per press
        b.response_delay_s = 0.35;
        b.inter_packet_gap_s = 0.5;
        b.payload_center = static_cast<int>(lerp_round(s, 400, sizes[k]));
        b.payload_jitter = 20;
        b.ttl = static_cast<std::uint8_t>(lerp_round(s, 64, ttls[k]));
        b.tcp_window = static_cast<std::uint16_t>(lerp_round(s, 8192, windows[k]));
        b.remote_port = static_cast<std::uint16_t>(lerp_round(s, 8883, ports[k]));
        b.remote_ip = netcapture::parse_ipv4(
            "34.192.0." + std::to_string(lerp_round(s, 10, ip_last[k])));
        b.direction_mix = 0.5;
        p.buttons[b.button_id] = b;
    }
    p.background.rate_pps = 0.0;  // silent when idle
    p.init_burst.count = 0;
    return p;
}

DeviceProfile make_echo_profile(double signal_strength) {
    if (signal_strength < 0.0 || signal_strength > 1.0) {
        throw IothError("profile", "signal_strength must be in [0,1]");
    }
    DeviceProfile p;
    p.name = "echo_show_like";
    p.device_mac = netcapture::parse_mac("02:45:43:48:4f:35");
    p.gateway_mac = netcapture::parse_mac("02:47:57:00:00:01");
    p.device_ip = netcapture::parse_ipv4("192.168.1.40");
    const double s = signal_strength;
    // Poisson means share a 66-packet average at any signal strength, which
    // is what pins the in-window packet rate regardless of the knob.
    const int means[4] = {60, 64, 68, 72};
    const int sizes[4] = {300, 450, 600, 750};
    const int ports[4] = {443, 8443, 4070, 9000};
    const int ip_last[4] = {15, 25, 35, 45};
    for (int k = 0; k < 4; ++k) {
        BurstSpec b;
        b.button_id = k + 1;
        b.fixed_count = false;
        b.poisson_mean = 66.0 + s * (means[k] - 66.0);
        b.response_delay_s = 0.2;
        b.inter_packet_gap_s = 0.05;
        b.payload_center = static_cast<int>(lerp_round(s, 525, sizes[k]));
        b.payload_jitter = 60;
        b.ttl = 64;
        b.tcp_window = 16384;
        b.remote_port = static_cast<std::uint16_t>(lerp_round(s, 443, ports[k]));
        b.remote_ip = netcapture::parse_ipv4(
            "54.239.1." + std::to_string(lerp_round(s, 15, ip_last[k])));
        b.direction_mix = 0.5;
        p.buttons[b.button_id] = b;
    }
    p.background.rate_pps = 2.25;
    p.background.endpoints = {
        {netcapture::parse_ipv4("54.239.1.200"), 443},
        {netcapture::parse_ipv4("52.94.5.16"), 443},
        {netcapture::parse_ipv4("176.32.100.9"), 8080},
    };
    p.init_burst.count = 120;
    p.init_burst.start_s = 0.5;
    p.init_burst.gap_s = 0.06;
    return p;
}

std::map<std::string, DeviceProfile> builtin_profiles(double signal_strength) {
    return {{"sensi_like", make_sensi_profile(signal_strength)},
            {"echo_show_like", make_echo_profile(signal_strength)}};
}

namespace {

json burst_to_json(const BurstSpec& b) {
    json j;
    j["id"] = b.button_id;
    if (b.fixed_count) {
        j["count_fixed"] = b.count_fixed;
    } else {
        j["count_poisson_mean"] = b.poisson_mean;
    }
    j["response_delay_s"] = b.response_delay_s;
    j["inter_packet_gap_s"] = b.inter_packet_gap_s;
    j["remote_ip"] = netcapture::ipv4_to_string(b.remote_ip);
    j["remote_port"] = b.remote_port;
    j["payload_center"] = b.payload_center;
    j["payload_jitter"] = b.payload_jitter;
    j["ttl"] = b.ttl;
    j["tcp_window"] = b.tcp_window;
    j["direction_mix"] = b.direction_mix;
    return j;
}

BurstSpec burst_from_json(const json& j) {
    BurstSpec b;
    b.button_id = json_require<int>(j, "id", "profile");
    if (j.contains("count_fixed")) {
        b.fixed_count = true;
        b.count_fixed = j.at("count_fixed").get<int>();
        if (b.count_fixed < 0) throw IothError("profile", "count_fixed must be >= 0");
    } else if (j.contains("count_poisson_mean")) {
        b.fixed_count = false;
        b.poisson_mean = j.at("count_poisson_mean").get<double>();
        if (b.poisson_mean < 0) throw IothError("profile", "poisson mean must be >= 0");
    } else {
        throw IothError("profile", "button burst needs count_fixed or count_poisson_mean");
    }
    b.response_delay_s = json_or<double>(j, "response_delay_s", 0.2);
    if (b.response_delay_s < 0) throw IothError("profile", "response delay must be >= 0");
    b.inter_packet_gap_s = json_or<double>(j, "inter_packet_gap_s", 0.05);
    b.remote_ip = netcapture::parse_ipv4(json_require<std::string>(j, "remote_ip", "profile"));
    b.remote_port = static_cast<std::uint16_t>(json_or<int>(j, "remote_port", 443));
    b.payload_center = json_or<int>(j, "payload_center", 400);
    b.payload_jitter = json_or<int>(j, "payload_jitter", 20);
    b.ttl = static_cast<std::uint8_t>(json_or<int>(j, "ttl", 64));
    b.tcp_window = static_cast<std::uint16_t>(json_or<int>(j, "tcp_window", 8192));
    b.direction_mix = json_or<double>(j, "direction_mix", 0.5);
    return b;
}

}  // namespace

DeviceProfile load_profile_json(const std::string& path) {
    const json j = load_json_file(path, "profile");
    DeviceProfile p;
    p.name = json_require<std::string>(j, "device_name", "profile");
    p.device_mac = netcapture::parse_mac(json_require<std::string>(j, "device_mac", "profile"));
    p.gateway_mac = netcapture::parse_mac(
        json_or<std::string>(j, "gateway_mac", "02:47:57:00:00:01"));
    p.device_ip = netcapture::parse_ipv4(json_require<std::string>(j, "device_ip", "profile"));
    if (!j.contains("buttons") || !j.at("buttons").is_array() || j.at("buttons").empty()) {
        throw IothError("profile", "profile needs a non-empty buttons array");
    }
    for (const auto& jb : j.at("buttons")) {
        BurstSpec b = burst_from_json(jb);
        if (!p.buttons.emplace(b.button_id, b).second) {
            throw IothError("profile", "duplicate button id in profile");
        }
    }
    if (j.contains("background")) {
        const json& bg = j.at("background");
        p.background.rate_pps = json_or<double>(bg, "rate_pps", 0.0);
        if (p.background.rate_pps < 0) throw IothError("profile", "rate must be >= 0");
        if (bg.contains("endpoints")) {
            for (const auto& je : bg.at("endpoints")) {
                p.background.endpoints.emplace_back(
                    netcapture::parse_ipv4(json_require<std::string>(je, "ip", "profile")),
                    static_cast<std::uint16_t>(json_or<int>(je, "port", 443)));
            }
        }
        p.background.payload_center = json_or<int>(bg, "payload_center", 160);
        p.background.payload_jitter = json_or<int>(bg, "payload_jitter", 120);
    }
    if (j.contains("init_burst")) {
        const json& ib = j.at("init_burst");
        p.init_burst.count = json_or<int>(ib, "count", 0);
        p.init_burst.start_s = json_or<double>(ib, "start_s", 0.5);
        p.init_burst.gap_s = json_or<double>(ib, "gap_s", 0.06);
    }
    return p;
}

void save_profile_json(const std::string& path, const DeviceProfile& p) {
    json j;
    j["device_name"] = p.name;
    j["device_mac"] = netcapture::mac_to_string(p.device_mac);
    j["gateway_mac"] = netcapture::mac_to_string(p.gateway_mac);
    j["device_ip"] = netcapture::ipv4_to_string(p.device_ip);
    json buttons = json::array();
    for (const auto& [id, b] : p.buttons) buttons.push_back(burst_to_json(b));
    j["buttons"] = std::move(buttons);
    json bg;
    bg["rate_pps"] = p.background.rate_pps;
    json eps = json::array();
    for (const auto& [ip, port] : p.background.endpoints) {
        eps.push_back({{"ip", netcapture::ipv4_to_string(ip)}, {"port", port}});
    }
    bg["endpoints"] = std::move(eps);
    bg["payload_center"] = p.background.payload_center;
    bg["payload_jitter"] = p.background.payload_jitter;
    j["background"] = std::move(bg);
    if (p.init_burst.count > 0) {
        j["init_burst"] = {{"count", p.init_burst.count},
                           {"start_s", p.init_burst.start_s},
                           {"gap_s", p.init_burst.gap_s}};
    }
    save_json_file(path, j, "profile");
}

DeviceProfile resolve_profile(const std::string& name_or_path, double signal_strength) {
    if (name_or_path == "sensi_like") return make_sensi_profile(signal_strength);
    if (name_or_path == "echo_show_like") return make_echo_profile(signal_strength);
    return load_profile_json(name_or_path);
}

}  // namespace ioth::devicesim
