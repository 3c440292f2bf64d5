#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ioth::netcapture {

constexpr std::uint16_t kEthertypeIpv4 = 0x0800;
constexpr std::uint8_t kIpProtoTcp = 6;

// Feature vector layout: 40 bytes of IPv4 header + 60 bytes of TCP header,
// one feature per bit, -1 marking positions beyond the actual header length.
constexpr int kIpv4FeatureBits = 320;
constexpr int kTcpFeatureBits = 480;
constexpr int kFeatureBits = kIpv4FeatureBits + kTcpFeatureBits;

using Mac = std::array<std::uint8_t, 6>;

struct PacketRecord {
    std::int64_t ts_us = 0;  // microseconds from capture epoch
    Mac dst_mac{};
    Mac src_mac{};
    std::uint16_t ethertype = 0;
    std::vector<std::uint8_t> ipv4_header;  // 20-60 bytes, empty if not IPv4
    std::vector<std::uint8_t> tcp_header;   // 20-60 bytes, empty if not TCP
    std::vector<std::uint8_t> payload;
    std::uint32_t orig_len = 0;  // 0 = same as the assembled frame size

    // decoded convenience fields, consistent with the raw header bytes
    std::uint32_t src_ip = 0;
    std::uint32_t dst_ip = 0;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;

    // ground truth retained in memory for oracle tests; never exported
    int cause_press_index = -1;

    double seconds() const { return static_cast<double>(ts_us) * 1e-6; }
    std::size_t frame_size() const {
        return 14 + ipv4_header.size() + tcp_header.size() + payload.size();
    }
};

struct Trace {
    std::vector<PacketRecord> packets;
    double capture_start_s = 0.0;
    double capture_end_s = 0.0;
};

std::string mac_to_string(const Mac& mac);
Mac parse_mac(const std::string& text);
std::string ipv4_to_string(std::uint32_t ip);
std::uint32_t parse_ipv4(const std::string& text);

// Header builders used by the virtual device. IPv4 checksum is computed;
// the TCP checksum is left zero (nothing downstream validates payloads).
std::vector<std::uint8_t> build_ipv4_header(std::uint32_t src_ip, std::uint32_t dst_ip,
                                            std::uint8_t ttl, std::uint16_t ident,
                                            std::uint16_t l4_length);
std::vector<std::uint8_t> build_tcp_header(std::uint16_t src_port, std::uint16_t dst_port,
                                           std::uint32_t seq, std::uint32_t ack,
                                           std::uint8_t flags, std::uint16_t window);

// Fills the decoded convenience fields from the raw headers.
void decode_fields(PacketRecord& p);

// Classic libpcap, version 2.4, linktype 1 (Ethernet), microsecond stamps.
// Writing uses little-endian headers; reading accepts either byte order.
std::vector<std::uint8_t> write_pcap(const Trace& trace);
Trace read_pcap(const std::vector<std::uint8_t>& bytes);
void save_pcap(const std::string& path, const Trace& trace);
Trace load_pcap(const std::string& path);

// Keeps packets to or from the device MAC that are IPv4 + TCP; order kept.
Trace filter_device_tcp(const Trace& trace, const Mac& device_mac);

struct FeatureRow {
    double rel_timestamp_s = 0.0;
    std::array<std::int8_t, kFeatureBits> bits{};
};

// Expands header bytes into bits, most significant first. Endpoint fields
// (IP addresses, TCP ports) are masked to -1 unless include_endpoints: with
// per-button remote endpoints they would make classification trivial.
FeatureRow featurize(const PacketRecord& packet, double capture_start_s,
                     bool include_endpoints = false);

struct WindowStats {
    long active_count = 0;
    long inactive_count = 0;
    long excluded_count = 0;
    double active_duration_s = 0.0;
    double inactive_duration_s = 0.0;
    double active_rate = 0.0;
    double inactive_rate = 0.0;
    double ratio = 0.0;
    bool ratio_defined = false;  // false when inactive_rate is 0
};

// Rates over the active window vs the remainder of the capture, with the
// exclusion windows (e.g. device initialization) removed from both counts
// and durations. Windows are half-open [start, end).
WindowStats window_stats(const Trace& trace, std::pair<double, double> active_window,
                         const std::vector<std::pair<double, double>>& exclusions);

// Contiguous bins covering the capture; counts sum to the trace size.
std::vector<std::pair<double, long>> timeline_bins(const Trace& trace, double bin_width_s);

// Feature CSV: ts,ipv4_b0..ipv4_b319,tcp_b0..tcp_b479. With labels present
// the dataset variant appends label,press_index.
struct LabeledRow {
    FeatureRow row;
    int label = -1;
    int press_index = -1;
};
void save_feature_csv(const std::string& path, const std::vector<FeatureRow>& rows);
void save_dataset_csv(const std::string& path, const std::vector<LabeledRow>& rows);
std::vector<LabeledRow> load_dataset_csv(const std::string& path, bool require_labels);

}  // namespace ioth::netcapture
