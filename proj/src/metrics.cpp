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

#include "smallworld/metrics.h"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace smallworld
{

void TimeWindow::validate(const TimeFrameSpec& frames) const
{
    if (start_frame >= end_frame || end_frame > frames.horizon) {
        throw std::invalid_argument("time window must satisfy 0 <= start < end <= horizon");
    }
}

std::size_t visited_cells_count(const Trajectory& trajectory, const TimeWindow& window)
{
    std::vector<CellId> cells;
    for (const Stay& stay : trajectory.stays()) {
        if (stay.end <= window.start_frame) {
            continue;
        }
        if (stay.begin >= window.end_frame) {
            break;
        }
        cells.push_back(stay.cell);
    }
    std::sort(cells.begin(), cells.end());
    return static_cast<std::size_t>(std::unique(cells.begin(), cells.end()) - cells.begin());
}

IdiReport compute_idi(const WorldModel& world, const TimeWindow& window)
{
    if (world.population() == 0) {
        throw std::invalid_argument("cannot compute IDI of an empty population");
    }
    if (world.grid.num_cells() == 0) {
        throw std::invalid_argument("cannot compute IDI on an empty grid");
    }
    window.validate(world.frames);

    IdiReport report;
    report.window = window;
    report.m      = world.population();
    report.n_cell = world.grid.num_cells();
    for (const Trajectory& t : world.trajectories) {
        report.sum_c += visited_cells_count(t, window);
    }
    const auto sum_c  = static_cast<double>(report.sum_c);
    const auto m      = static_cast<double>(report.m);
    const auto n_cell = static_cast<double>(report.n_cell);
    report.idi        = sum_c / n_cell;
    report.avg_c      = sum_c / m;
    report.rho1       = report.avg_c / n_cell;
    report.rho2       = report.rho1 * report.rho1;
    report.conn       = report.idi * report.idi;
    report.conn_exact = report.rho2 * m * (m - 1.0);
    return report;
}

} // namespace smallworld
