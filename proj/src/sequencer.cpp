#include "ioth/sequencer.hpp"

#include <algorithm>
#include <set>

#include "ioth/csv.hpp"
#include "ioth/errors.hpp"
#include "ioth/rng.hpp"

namespace ioth::sequencer {

void validate_button_set(const std::vector<int>& buttons, bool allow_large) {
    if (buttons.empty()) throw IothError("sequence", "button set is empty");
    std::set<int> seen;
    for (int id : buttons) {
        if (id < 1) throw IothError("sequence", "button ids must be >= 1");
        if (!seen.insert(id).second) {
            throw IothError("sequence", "duplicate button id " + std::to_string(id));
        }
    }
    if (buttons.size() > 8 && !allow_large) {
        throw IothError("sequence", "button set of " + std::to_string(buttons.size()) +
                                        " would expand to more than 8! sequences; pass "
                                        "--allow-large to override");
    }
}

std::vector<std::vector<int>> permutations(const std::vector<int>& buttons,
                                           bool allow_large) {
    validate_button_set(buttons, allow_large);
    std::vector<int> cur = buttons;
    std::sort(cur.begin(), cur.end());
    std::vector<std::vector<int>> out;
    do {
        out.push_back(cur);
    } while (std::next_permutation(cur.begin(), cur.end()));
    return out;
}

InteractionSchedule build_schedule(const std::vector<std::vector<int>>& sequences,
                                   double delay_s, const Randomization& randomization,
                                   std::uint64_t seed) {
    if (!(delay_s > 0.0)) throw IothError("sequence", "inter-press delay must be > 0");
    if (randomization.iterations < 1) {
        throw IothError("sequence", "iterations must be >= 1");
    }
    if (randomization.repeat_probability < 0.0 || randomization.repeat_probability > 1.0) {
        throw IothError("sequence", "repeat probability must be in [0,1]");
    }
    if (randomization.delay_jitter_max_s < 0.0) {
        throw IothError("sequence", "delay jitter must be >= 0");
    }

    InteractionSchedule schedule;
    schedule.inter_press_delay_s = delay_s;
    schedule.randomization = randomization;
    schedule.seed = seed;

    Rng rng(seed);
    double t = 0.0;
    bool first = true;
    // Jitter is drawn only when enabled so that turning it off does not
    // change the repeat-draw stream for the same seed.
    const auto gap = [&] {
        double g = delay_s;
        if (randomization.delay_jitter_max_s > 0.0) {
            g += rng.uniform(0.0, randomization.delay_jitter_max_s);
        }
        return g;
    };
    const auto append = [&](int button_id) {
        if (!first) t += gap();
        first = false;
        schedule.presses.push_back(
            {static_cast<int>(schedule.presses.size()), button_id, t});
    };

    for (int it = 0; it < randomization.iterations; ++it) {
        for (const auto& seq : sequences) {
            for (int button : seq) {
                append(button);
                if (randomization.repeat_probability > 0.0 &&
                    rng.bernoulli(randomization.repeat_probability)) {
                    append(button);  // duplicates are not themselves re-duplicated
                }
            }
        }
    }
    return schedule;
}

InteractionSchedule training_schedule(const std::vector<int>& buttons,
                                      int presses_per_button, double delay_s) {
    validate_button_set(buttons, /*allow_large=*/true);
    if (presses_per_button < 1) {
        throw IothError("sequence", "presses per button must be >= 1");
    }
    if (!(delay_s > 0.0)) throw IothError("sequence", "inter-press delay must be > 0");

    std::vector<int> ordered = buttons;
    std::sort(ordered.begin(), ordered.end());

    InteractionSchedule schedule;
    schedule.inter_press_delay_s = delay_s;
    int idx = 0;
    for (int id : ordered) {
        for (int k = 0; k < presses_per_button; ++k) {
            schedule.presses.push_back({idx, id, idx * delay_s});
            ++idx;
        }
    }
    return schedule;
}

void save_schedule_csv(const std::string& path, const InteractionSchedule& schedule) {
    csv::Table t;
    t.header = {"press_index", "button_id", "scheduled_time_s"};
    for (const auto& p : schedule.presses) {
        t.rows.push_back({std::to_string(p.press_index), std::to_string(p.button_id),
                          csv::format_double(p.scheduled_time_s)});
    }
    csv::write_file(path, t, "sequence");
}

InteractionSchedule load_schedule_csv(const std::string& path) {
    const auto t = csv::read_file(path, "schedule");
    const auto ci = t.col("press_index", "schedule");
    const auto cb = t.col("button_id", "schedule");
    const auto ct = t.col("scheduled_time_s", "schedule");
    InteractionSchedule schedule;
    for (const auto& row : t.rows) {
        Press p;
        p.press_index = static_cast<int>(csv::parse_int(row[ci], "schedule"));
        p.button_id = static_cast<int>(csv::parse_int(row[cb], "schedule"));
        p.scheduled_time_s = csv::parse_double(row[ct], "schedule");
        schedule.presses.push_back(p);
    }
    return schedule;
}

}  // namespace ioth::sequencer
