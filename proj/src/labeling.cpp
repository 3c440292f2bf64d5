#include "ioth/labeling.hpp"

#include <algorithm>
#include <sstream>

#include "ioth/errors.hpp"

namespace ioth::labeling {

namespace {

// All window arithmetic runs in integer microseconds — the trace's native
// precision — so "gap equals window" never misreads as an overlap and the
// half-open boundary is exact.
struct Window {
    std::int64_t start_us;
    int button_id;
    int press_index;
};

std::vector<Window> hit_windows(const actuation::ActuationLog& log, std::int64_t window_us,
                                const LabelOptions& opts) {
    std::vector<Window> windows;
    for (const auto& ev : log.events) {
        if (ev.outcome != actuation::Outcome::kHit) continue;
        const double t = opts.source == TimestampSource::kActual ? ev.actual_time_s
                                                                 : ev.commanded_time_s;
        windows.push_back({actuation::to_micros(t), ev.button_id, ev.press_index});
    }
    std::sort(windows.begin(), windows.end(), [](const Window& a, const Window& b) {
        return a.start_us != b.start_us ? a.start_us < b.start_us
                                        : a.press_index < b.press_index;
    });
    if (!opts.latest_wins) {
        for (std::size_t i = 1; i < windows.size(); ++i) {
            if (windows[i].start_us - windows[i - 1].start_us < window_us) {
                std::ostringstream oss;
                oss << "press windows overlap: press " << windows[i - 1].press_index
                    << " at t=" << actuation::from_micros(windows[i - 1].start_us)
                    << " and press " << windows[i].press_index << " at t="
                    << actuation::from_micros(windows[i].start_us)
                    << " are closer than the " << opts.window_s
                    << " s window; rerun with --latest-wins to attribute to the "
                       "latest preceding press";
                throw IothError("label", oss.str());
            }
        }
    }
    return windows;
}

}  // namespace

std::vector<int> assign_presses(const netcapture::Trace& trace,
                                const actuation::ActuationLog& log,
                                const LabelOptions& opts) {
    const std::int64_t window_us = actuation::to_micros(opts.window_s);
    if (window_us <= 0) throw IothError("label", "window must be > 0");
    const auto windows = hit_windows(log, window_us, opts);

    std::vector<int> assignment(trace.packets.size(), -1);
    for (std::size_t i = 0; i < trace.packets.size(); ++i) {
        const std::int64_t t = trace.packets[i].ts_us;
        // Latest window starting at or before t. Windows are sorted by start,
        // so this is the only candidate that can contain t: any earlier one
        // would overlap it, which is either rejected above or resolved here
        // by taking the latest.
        auto it = std::upper_bound(
            windows.begin(), windows.end(), t,
            [](std::int64_t value, const Window& w) { return value < w.start_us; });
        if (it == windows.begin()) continue;
        --it;
        if (t < it->start_us + window_us) {
            assignment[i] = it->press_index;
        }
    }
    return assignment;
}

LabeledDataset label(const netcapture::Trace& trace, const actuation::ActuationLog& log,
                     const LabelOptions& opts) {
    const auto assignment = assign_presses(trace, log, opts);

    std::vector<int> button_of_press;
    for (const auto& ev : log.events) {
        const auto idx = static_cast<std::size_t>(ev.press_index);
        if (button_of_press.size() <= idx) button_of_press.resize(idx + 1, -1);
        button_of_press[idx] = ev.button_id;
    }

    LabeledDataset out;
    out.window_s = opts.window_s;
    for (std::size_t i = 0; i < trace.packets.size(); ++i) {
        if (assignment[i] < 0) {
            ++out.unlabeled_count;
            continue;
        }
        netcapture::LabeledRow row;
        row.row = netcapture::featurize(trace.packets[i], trace.capture_start_s,
                                        opts.include_endpoints);
        row.press_index = assignment[i];
        row.label = button_of_press[static_cast<std::size_t>(assignment[i])];
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace ioth::labeling
