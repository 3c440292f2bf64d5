#include "ioth/netcapture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ioth/csv.hpp"
#include "ioth/errors.hpp"

namespace ioth::netcapture {

namespace {

constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
constexpr std::uint32_t kPcapMagicSwapped = 0xd4c3b2a1;
constexpr std::uint32_t kLinktypeEthernet = 1;

void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_u16be(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

struct ByteReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;
    bool swapped = false;  // file byte order differs from header constants

    bool has(std::size_t n) const { return pos + n <= bytes.size(); }

    std::uint32_t u32() {
        std::uint32_t v;
        if (swapped) {
            v = (static_cast<std::uint32_t>(bytes[pos]) << 24) |
                (static_cast<std::uint32_t>(bytes[pos + 1]) << 16) |
                (static_cast<std::uint32_t>(bytes[pos + 2]) << 8) |
                static_cast<std::uint32_t>(bytes[pos + 3]);
        } else {
            v = static_cast<std::uint32_t>(bytes[pos]) |
                (static_cast<std::uint32_t>(bytes[pos + 1]) << 8) |
                (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
                (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
        }
        pos += 4;
        return v;
    }

    std::uint16_t u16() {
        std::uint16_t v;
        if (swapped) {
            v = static_cast<std::uint16_t>((bytes[pos] << 8) | bytes[pos + 1]);
        } else {
            v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        }
        pos += 2;
        return v;
    }
};

std::uint16_t be16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

// RFC 1071 internet checksum.
std::uint16_t ipv4_checksum(const std::vector<std::uint8_t>& header) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < header.size(); i += 2) {
        sum += static_cast<std::uint32_t>((header[i] << 8) | header[i + 1]);
    }
    if (header.size() % 2 == 1) sum += static_cast<std::uint32_t>(header.back() << 8);
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum & 0xffff);
}

PacketRecord parse_frame(std::int64_t ts_us, const std::uint8_t* frame, std::size_t len,
                         std::uint32_t orig_len) {
    if (len < 14) throw IothError("pcap", "frame shorter than an ethernet header");
    PacketRecord p;
    p.ts_us = ts_us;
    std::copy(frame, frame + 6, p.dst_mac.begin());
    std::copy(frame + 6, frame + 12, p.src_mac.begin());
    p.ethertype = be16(frame + 12);
    std::size_t off = 14;
    if (p.ethertype == kEthertypeIpv4) {
        if (len < off + 20) throw IothError("pcap", "truncated ipv4 header");
        const std::size_t ihl = static_cast<std::size_t>(frame[off] & 0x0f) * 4;
        if (ihl < 20 || ihl > 60 || len < off + ihl) {
            throw IothError("pcap", "bad ipv4 header length");
        }
        p.ipv4_header.assign(frame + off, frame + off + ihl);
        off += ihl;
        if (p.ipv4_header[9] == kIpProtoTcp) {
            if (len < off + 20) throw IothError("pcap", "truncated tcp header");
            const std::size_t doff = static_cast<std::size_t>(frame[off + 12] >> 4) * 4;
            if (doff < 20 || doff > 60 || len < off + doff) {
                throw IothError("pcap", "bad tcp header length");
            }
            p.tcp_header.assign(frame + off, frame + off + doff);
            off += doff;
        }
    }
    p.payload.assign(frame + off, frame + len);
    p.orig_len = orig_len == len ? 0 : orig_len;
    decode_fields(p);
    return p;
}

void append_frame(std::vector<std::uint8_t>& out, const PacketRecord& p) {
    out.insert(out.end(), p.dst_mac.begin(), p.dst_mac.end());
    out.insert(out.end(), p.src_mac.begin(), p.src_mac.end());
    put_u16be(out, p.ethertype);
    out.insert(out.end(), p.ipv4_header.begin(), p.ipv4_header.end());
    out.insert(out.end(), p.tcp_header.begin(), p.tcp_header.end());
    out.insert(out.end(), p.payload.begin(), p.payload.end());
}

}  // namespace

std::string mac_to_string(const Mac& mac) {
    char buf[18];
    std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x", mac[0], mac[1], mac[2],
                  mac[3], mac[4], mac[5]);
    return buf;
}

Mac parse_mac(const std::string& text) {
    Mac mac{};
    unsigned v[6];
    if (std::sscanf(text.c_str(), "%2x:%2x:%2x:%2x:%2x:%2x", &v[0], &v[1], &v[2], &v[3],
                    &v[4], &v[5]) != 6) {
        throw IothError("filter", "bad mac address '" + text + "'");
    }
    for (int i = 0; i < 6; ++i) mac[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v[i]);
    return mac;
}

std::string ipv4_to_string(std::uint32_t ip) {
    std::ostringstream oss;
    oss << ((ip >> 24) & 0xff) << '.' << ((ip >> 16) & 0xff) << '.' << ((ip >> 8) & 0xff)
        << '.' << (ip & 0xff);
    return oss.str();
}

std::uint32_t parse_ipv4(const std::string& text) {
    unsigned a, b, c, d;
    if (std::sscanf(text.c_str(), "%u.%u.%u.%u", &a, &b, &c, &d) != 4 || a > 255 || b > 255 ||
        c > 255 || d > 255) {
        throw IothError("profile", "bad ipv4 address '" + text + "'");
    }
    return (a << 24) | (b << 16) | (c << 8) | d;
}

std::vector<std::uint8_t> build_ipv4_header(std::uint32_t src_ip, std::uint32_t dst_ip,
                                            std::uint8_t ttl, std::uint16_t ident,
                                            std::uint16_t l4_length) {
    std::vector<std::uint8_t> h;
    h.reserve(20);
    h.push_back(0x45);  // version 4, ihl 5
    h.push_back(0x00);  // dscp/ecn
    put_u16be(h, static_cast<std::uint16_t>(20 + l4_length));
    put_u16be(h, ident);
    put_u16be(h, 0x4000);  // don't fragment
    h.push_back(ttl);
    h.push_back(kIpProtoTcp);
    put_u16be(h, 0);  // checksum placeholder
    put_u32be(h, src_ip);
    put_u32be(h, dst_ip);
    const std::uint16_t sum = ipv4_checksum(h);
    h[10] = static_cast<std::uint8_t>(sum >> 8);
    h[11] = static_cast<std::uint8_t>(sum & 0xff);
    return h;
}

std::vector<std::uint8_t> build_tcp_header(std::uint16_t src_port, std::uint16_t dst_port,
                                           std::uint32_t seq, std::uint32_t ack,
                                           std::uint8_t flags, std::uint16_t window) {
    std::vector<std::uint8_t> h;
    h.reserve(20);
    put_u16be(h, src_port);
    put_u16be(h, dst_port);
    put_u32be(h, seq);
    put_u32be(h, ack);
    h.push_back(0x50);  // data offset 5, no options
    h.push_back(flags);
    put_u16be(h, window);
    put_u16be(h, 0);  // checksum not set; nothing downstream validates it
    put_u16be(h, 0);  // urgent pointer
    return h;
}

void decode_fields(PacketRecord& p) {
    if (p.ipv4_header.size() >= 20) {
        p.src_ip = be32(p.ipv4_header.data() + 12);
        p.dst_ip = be32(p.ipv4_header.data() + 16);
    }
    if (p.tcp_header.size() >= 4) {
        p.src_port = be16(p.tcp_header.data());
        p.dst_port = be16(p.tcp_header.data() + 2);
    }
}

std::vector<std::uint8_t> write_pcap(const Trace& trace) {
    std::vector<std::uint8_t> out;
    put_u32le(out, kPcapMagic);
    put_u16le(out, 2);  // version 2.4
    put_u16le(out, 4);
    put_u32le(out, 0);      // thiszone
    put_u32le(out, 0);      // sigfigs
    put_u32le(out, 65535);  // snaplen
    put_u32le(out, kLinktypeEthernet);
    for (const auto& p : trace.packets) {
        if (p.ts_us < 0) throw IothError("pcap", "negative timestamp");
        put_u32le(out, static_cast<std::uint32_t>(p.ts_us / 1000000));
        put_u32le(out, static_cast<std::uint32_t>(p.ts_us % 1000000));
        std::vector<std::uint8_t> frame;
        append_frame(frame, p);
        put_u32le(out, static_cast<std::uint32_t>(frame.size()));
        put_u32le(out, p.orig_len != 0 ? p.orig_len
                                       : static_cast<std::uint32_t>(frame.size()));
        out.insert(out.end(), frame.begin(), frame.end());
    }
    return out;
}

Trace read_pcap(const std::vector<std::uint8_t>& bytes) {
    ByteReader r{bytes};
    if (!r.has(24)) throw IothError("pcap", "file shorter than the pcap global header");
    const std::uint32_t magic = r.u32();
    if (magic == kPcapMagicSwapped) {
        r.swapped = true;
    } else if (magic != kPcapMagic) {
        throw IothError("pcap", "bad magic: not a classic pcap file");
    }
    r.u16();  // version major
    r.u16();  // version minor
    r.u32();  // thiszone
    r.u32();  // sigfigs
    r.u32();  // snaplen
    const std::uint32_t linktype = r.u32();
    if (linktype != kLinktypeEthernet) {
        throw IothError("pcap", "unsupported linktype " + std::to_string(linktype) +
                                    " (only ethernet is handled)");
    }
    Trace trace;
    while (r.pos < bytes.size()) {
        if (!r.has(16)) throw IothError("pcap", "truncated record header");
        const std::uint32_t ts_sec = r.u32();
        const std::uint32_t ts_usec = r.u32();
        const std::uint32_t incl_len = r.u32();
        const std::uint32_t orig_len = r.u32();
        if (!r.has(incl_len)) throw IothError("pcap", "truncated record body");
        const std::int64_t ts_us =
            static_cast<std::int64_t>(ts_sec) * 1000000 + static_cast<std::int64_t>(ts_usec);
        trace.packets.push_back(parse_frame(ts_us, bytes.data() + r.pos, incl_len, orig_len));
        r.pos += incl_len;
    }
    trace.capture_start_s = 0.0;
    trace.capture_end_s = trace.packets.empty() ? 0.0 : trace.packets.back().seconds();
    for (const auto& p : trace.packets) {
        trace.capture_end_s = std::max(trace.capture_end_s, p.seconds());
    }
    return trace;
}

void save_pcap(const std::string& path, const Trace& trace) {
    const auto bytes = write_pcap(trace);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IothError("pcap", "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IothError("pcap", "write failed for " + path);
}

Trace load_pcap(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IothError("pcap", "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return read_pcap(bytes);
}

Trace filter_device_tcp(const Trace& trace, const Mac& device_mac) {
    Trace out;
    out.capture_start_s = trace.capture_start_s;
    out.capture_end_s = trace.capture_end_s;
    for (const auto& p : trace.packets) {
        const bool device = p.src_mac == device_mac || p.dst_mac == device_mac;
        if (device && p.ethertype == kEthertypeIpv4 && !p.tcp_header.empty()) {
            out.packets.push_back(p);
        }
    }
    return out;
}

FeatureRow featurize(const PacketRecord& packet, double capture_start_s,
                     bool include_endpoints) {
    if (packet.tcp_header.empty()) {
        throw IothError("featurize", "packet has no tcp header; filter the trace first");
    }
    FeatureRow row;
    row.rel_timestamp_s = packet.seconds() - capture_start_s;
    const auto expand = [&row](const std::vector<std::uint8_t>& header, int base_bit,
                               int max_bits) {
        for (int bit = 0; bit < max_bits; ++bit) {
            const std::size_t byte = static_cast<std::size_t>(bit / 8);
            std::int8_t v = -1;
            if (byte < header.size()) {
                v = static_cast<std::int8_t>((header[byte] >> (7 - bit % 8)) & 1);
            }
            row.bits[static_cast<std::size_t>(base_bit + bit)] = v;
        }
    };
    expand(packet.ipv4_header, 0, kIpv4FeatureBits);
    expand(packet.tcp_header, kIpv4FeatureBits, kTcpFeatureBits);
    if (!include_endpoints) {
        // IPv4 source+destination address bytes 12-19, TCP port bytes 0-3.
        for (int bit = 96; bit < 160; ++bit) row.bits[static_cast<std::size_t>(bit)] = -1;
        for (int bit = 0; bit < 32; ++bit) {
            row.bits[static_cast<std::size_t>(kIpv4FeatureBits + bit)] = -1;
        }
    }
    return row;
}

WindowStats window_stats(const Trace& trace, std::pair<double, double> active_window,
                         const std::vector<std::pair<double, double>>& exclusions) {
    const auto check_window = [&](std::pair<double, double> w, const char* name) {
        if (!(w.second > w.first)) {
            throw IothError("stats", std::string("zero or negative duration ") + name +
                                         " window");
        }
        if (w.first < trace.capture_start_s || w.second > trace.capture_end_s) {
            throw IothError("stats", std::string(name) + " window outside capture bounds");
        }
    };
    const bool empty_capture = trace.capture_end_s <= trace.capture_start_s;
    if (!empty_capture) {
        check_window(active_window, "active");
        for (const auto& ex : exclusions) check_window(ex, "exclusion");
    }

    const auto in_window = [](double t, std::pair<double, double> w) {
        return t >= w.first && t < w.second;
    };

    WindowStats stats;
    for (const auto& p : trace.packets) {
        const double t = p.seconds();
        bool excluded = false;
        for (const auto& ex : exclusions) {
            if (in_window(t, ex)) {
                excluded = true;
                break;
            }
        }
        if (excluded) {
            ++stats.excluded_count;
        } else if (in_window(t, active_window)) {
            ++stats.active_count;
        } else {
            ++stats.inactive_count;
        }
    }

    // Exclusion windows are assumed disjoint from each other; overlap with the
    // active window is subtracted so durations always partition the capture.
    double excluded_total = 0.0;
    double excluded_in_active = 0.0;
    for (const auto& ex : exclusions) {
        excluded_total += ex.second - ex.first;
        const double lo = std::max(ex.first, active_window.first);
        const double hi = std::min(ex.second, active_window.second);
        if (hi > lo) excluded_in_active += hi - lo;
    }
    const double capture_duration = trace.capture_end_s - trace.capture_start_s;
    stats.active_duration_s =
        empty_capture ? 0.0
                      : (active_window.second - active_window.first) - excluded_in_active;
    stats.inactive_duration_s =
        std::max(0.0, capture_duration - stats.active_duration_s - excluded_total);
    stats.active_rate = stats.active_duration_s > 0.0
                            ? static_cast<double>(stats.active_count) / stats.active_duration_s
                            : 0.0;
    stats.inactive_rate =
        stats.inactive_duration_s > 0.0
            ? static_cast<double>(stats.inactive_count) / stats.inactive_duration_s
            : 0.0;
    stats.ratio_defined = stats.inactive_rate > 0.0;
    stats.ratio = stats.ratio_defined ? stats.active_rate / stats.inactive_rate : 0.0;
    return stats;
}

std::vector<std::pair<double, long>> timeline_bins(const Trace& trace, double bin_width_s) {
    if (!(bin_width_s > 0.0)) throw IothError("timeline", "bin width must be > 0");
    const double duration = trace.capture_end_s - trace.capture_start_s;
    const long nbins = std::max(1L, static_cast<long>(std::ceil(duration / bin_width_s)));
    std::vector<std::pair<double, long>> bins;
    bins.reserve(static_cast<std::size_t>(nbins));
    for (long i = 0; i < nbins; ++i) {
        bins.emplace_back(trace.capture_start_s + static_cast<double>(i) * bin_width_s, 0L);
    }
    for (const auto& p : trace.packets) {
        long idx = static_cast<long>((p.seconds() - trace.capture_start_s) / bin_width_s);
        idx = std::clamp(idx, 0L, nbins - 1);  // packet at capture_end lands in the last bin
        bins[static_cast<std::size_t>(idx)].second++;
    }
    return bins;
}

namespace {

std::vector<std::string> feature_header(bool labeled) {
    std::vector<std::string> h;
    h.reserve(static_cast<std::size_t>(kFeatureBits) + 3);
    h.emplace_back("ts");
    for (int i = 0; i < kIpv4FeatureBits; ++i) h.push_back("ipv4_b" + std::to_string(i));
    for (int i = 0; i < kTcpFeatureBits; ++i) h.push_back("tcp_b" + std::to_string(i));
    if (labeled) {
        h.emplace_back("label");
        h.emplace_back("press_index");
    }
    return h;
}

void append_feature_fields(std::vector<std::string>& fields, const FeatureRow& row) {
    fields.push_back(csv::format_double(row.rel_timestamp_s));
    for (const auto b : row.bits) fields.push_back(std::to_string(static_cast<int>(b)));
}

}  // namespace

void save_feature_csv(const std::string& path, const std::vector<FeatureRow>& rows) {
    csv::Table t;
    t.header = feature_header(false);
    for (const auto& row : rows) {
        std::vector<std::string> fields;
        fields.reserve(t.header.size());
        append_feature_fields(fields, row);
        t.rows.push_back(std::move(fields));
    }
    csv::write_file(path, t, "featurize");
}

void save_dataset_csv(const std::string& path, const std::vector<LabeledRow>& rows) {
    csv::Table t;
    t.header = feature_header(true);
    for (const auto& lr : rows) {
        std::vector<std::string> fields;
        fields.reserve(t.header.size());
        append_feature_fields(fields, lr.row);
        fields.push_back(std::to_string(lr.label));
        fields.push_back(std::to_string(lr.press_index));
        t.rows.push_back(std::move(fields));
    }
    csv::write_file(path, t, "label");
}

std::vector<LabeledRow> load_dataset_csv(const std::string& path, bool require_labels) {
    const auto t = csv::read_file(path, "dataset");
    if (t.header.size() < static_cast<std::size_t>(kFeatureBits) + 1 ||
        t.header[0] != "ts") {
        throw IothError("dataset", "unexpected feature csv header in " + path);
    }
    const bool labeled = t.header.size() >= static_cast<std::size_t>(kFeatureBits) + 3 &&
                         t.header[static_cast<std::size_t>(kFeatureBits) + 1] == "label";
    if (require_labels && !labeled) {
        throw IothError("dataset", "csv has no label column: " + path);
    }
    std::vector<LabeledRow> rows;
    rows.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        LabeledRow lr;
        lr.row.rel_timestamp_s = csv::parse_double(r[0], "dataset");
        for (int i = 0; i < kFeatureBits; ++i) {
            const auto v = csv::parse_int(r[static_cast<std::size_t>(i) + 1], "dataset");
            if (v < -1 || v > 1) throw IothError("dataset", "feature values must be -1/0/1");
            lr.row.bits[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(v);
        }
        if (labeled) {
            lr.label = static_cast<int>(
                csv::parse_int(r[static_cast<std::size_t>(kFeatureBits) + 1], "dataset"));
            lr.press_index = static_cast<int>(
                csv::parse_int(r[static_cast<std::size_t>(kFeatureBits) + 2], "dataset"));
        }
        rows.push_back(std::move(lr));
    }
    return rows;
}

}  // namespace ioth::netcapture
