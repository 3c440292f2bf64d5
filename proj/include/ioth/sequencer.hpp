#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ioth::sequencer {

// Randomization knobs for schedule construction. Defaults reproduce the
// plain fixed-delay suite.
struct Randomization {
    double repeat_probability = 0.0;  // chance a press is immediately pressed again
    double delay_jitter_max_s = 0.0;  // extra uniform [0, max] on top of the base delay
    int iterations = 1;               // whole-suite repetitions
};

struct Press {
    int press_index = 0;
    int button_id = 0;
    double scheduled_time_s = 0.0;
};

struct InteractionSchedule {
    std::vector<Press> presses;
    double inter_press_delay_s = 10.0;
    Randomization randomization;
    std::uint64_t seed = 0;
};

// Validates a button set: non-empty, distinct ids >= 1. Sets larger than 8
// trip the factorial guard unless allow_large is passed (40320 sequences is
// the ceiling for desk-scale suites).
void validate_button_set(const std::vector<int>& buttons, bool allow_large = false);

// All n! orderings of the set, lexicographic over the sorted ids.
std::vector<std::vector<int>> permutations(const std::vector<int>& buttons,
                                           bool allow_large = false);

// Concatenates the sequences (repeated `iterations` times) into one press
// stream. First press at t = 0; every later press is delay + jitter after its
// predecessor; with repeat_probability p each press is immediately duplicated
// once with probability p.
InteractionSchedule build_schedule(const std::vector<std::vector<int>>& sequences,
                                   double delay_s, const Randomization& randomization,
                                   std::uint64_t seed);

// Block design: presses_per_button identical presses per button, in id order,
// at a fixed delay.
InteractionSchedule training_schedule(const std::vector<int>& buttons,
                                      int presses_per_button, double delay_s);

// CSV: press_index,button_id,scheduled_time_s
void save_schedule_csv(const std::string& path, const InteractionSchedule& schedule);
InteractionSchedule load_schedule_csv(const std::string& path);

}  // namespace ioth::sequencer
