// Copyright 2026 The smallworld Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SMALLWORLD_METRICS_H
#define SMALLWORLD_METRICS_H

#include "smallworld/world.h"

#include <cstdint>

namespace smallworld
{

/// Frames [start_frame, end_frame).
struct TimeWindow {
    FrameIndex start_frame = 0;
    FrameIndex end_frame   = 1;

    static TimeWindow whole(const TimeFrameSpec& frames)
    {
        return {0, frames.horizon};
    }
    void validate(const TimeFrameSpec& frames) const;

    bool operator==(const TimeWindow&) const = default;
};

/**
 * Crowd-flow statistics of one world over one window.
 *
 * idi is the mean number of distinct visitors per cell, sum_c / n_cell.
 * rho1 is the probability that a given person visits a given cell and
 * rho2 = rho1^2 that two given people both do. conn = idi^2 approximates the
 * expected co-located pairs per cell using M(M-1) ~ M^2; conn_exact keeps the
 * M(M-1) factor.
 */
struct IdiReport {
    double idi          = 0.0;
    double avg_c        = 0.0;
    std::uint64_t sum_c = 0;
    std::uint64_t m     = 0;
    std::uint64_t n_cell = 0;
    double rho1         = 0.0;
    double rho2         = 0.0;
    double conn         = 0.0;
    double conn_exact   = 0.0;
    TimeWindow window;
};

/// Distinct cells visited during the window (c_i).
std::size_t visited_cells_count(const Trajectory& trajectory, const TimeWindow& window);

/// Throws std::invalid_argument for an empty population or an invalid window.
IdiReport compute_idi(const WorldModel& world, const TimeWindow& window);

} // namespace smallworld

#endif // SMALLWORLD_METRICS_H
