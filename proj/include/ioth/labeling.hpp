#pragma once

#include <string>
#include <vector>

#include "ioth/actuation.hpp"
#include "ioth/netcapture.hpp"

namespace ioth::labeling {

enum class TimestampSource { kActual, kCommanded };

struct LabelOptions {
    double window_s = 10.0;
    bool latest_wins = false;        // resolve overlapping press windows
    bool include_endpoints = false;  // forwarded to featurize
    TimestampSource source = TimestampSource::kActual;
};

struct LabeledDataset {
    std::vector<netcapture::LabeledRow> rows;
    double window_s = 10.0;
    long unlabeled_count = 0;
};

// Press index each packet falls to, or -1: a packet belongs to the press
// whose half-open window [t_press, t_press + window) contains its timestamp.
// Missed presses cast no window. Without latest_wins, overlapping windows
// (press gap < window) raise an ambiguity error naming the colliding presses.
std::vector<int> assign_presses(const netcapture::Trace& trace,
                                const actuation::ActuationLog& log,
                                const LabelOptions& opts);

// Featurizes every assigned packet; packets outside all windows are counted
// in unlabeled_count and dropped.
LabeledDataset label(const netcapture::Trace& trace, const actuation::ActuationLog& log,
                     const LabelOptions& opts);

}  // namespace ioth::labeling
