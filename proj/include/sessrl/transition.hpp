#pragma once

#include <cstdint>
#include <vector>

namespace sessrl {

/// One training/evaluation step cut out of a session: the window of attribute
/// ids preceding an event, the event's attribute as the action, its normalized
/// dwell as the reward, and the window rolled forward by one. The transition
/// at the last event carries the session outcome.
struct Transition {
    std::vector<std::int32_t> state;      // k attribute ids, oldest first
    std::int32_t action = 0;
    double reward = 0.0;                  // normalized dwell, in [0, 1]
    std::vector<std::int32_t> next_state; // state shifted by one event
    bool terminal = false;
    bool purchased = false;               // meaningful only when terminal
};

} // namespace sessrl
