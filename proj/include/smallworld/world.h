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

#ifndef SMALLWORLD_WORLD_H
#define SMALLWORLD_WORLD_H

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smallworld
{

using CellId     = std::uint32_t;
using FrameIndex = std::uint32_t;

inline constexpr std::int64_t seconds_per_day = 86400;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

/**
 * Uniform square grid covering the study area.
 * Cell ids are row-major: cell_id = row * cols + col, row 0 starting at origin.y.
 */
struct GridSpec {
    int rows         = 1;
    int cols         = 1;
    double cell_size = 1.0;
    Point2 origin;

    std::size_t num_cells() const
    {
        return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    }
    CellId cell_id(int row, int col) const
    {
        return static_cast<CellId>(row * cols + col);
    }
    int row_of(CellId cell) const
    {
        return static_cast<int>(cell) / cols;
    }
    int col_of(CellId cell) const
    {
        return static_cast<int>(cell) % cols;
    }
    /// Cell containing p, or nothing when p lies outside [origin, origin + extent).
    std::optional<CellId> locate(Point2 p) const;

    /// Throws std::invalid_argument on a malformed grid.
    void validate() const;

    bool operator==(const GridSpec&) const = default;
};

struct TimeFrameSpec {
    std::int64_t frame_duration = 60; ///< seconds
    FrameIndex horizon          = 1; ///< number of frames

    FrameIndex frames_per_day() const
    {
        return static_cast<FrameIndex>(seconds_per_day / frame_duration);
    }
    void validate() const;

    bool operator==(const TimeFrameSpec&) const = default;
};

struct Visit {
    FrameIndex frame = 0;
    CellId cell      = 0;

    bool operator==(const Visit&) const = default;
};

/// Consecutive frames [begin, end) spent in one cell.
struct Stay {
    FrameIndex begin = 0;
    FrameIndex end   = 0;
    CellId cell      = 0;

    bool operator==(const Stay&) const = default;
};

/**
 * Per-frame cell occupancy of one agent.
 *
 * Stored run-length encoded: a sorted list of non-overlapping stays, with
 * touching stays in the same cell merged. Frames not covered by any stay are
 * frames where the agent is absent.
 */
class Trajectory
{
public:
    Trajectory() = default;

    /// Stays must be sorted and non-overlapping; adjacent same-cell stays are merged.
    Trajectory(std::string user_id, std::vector<Stay> stays);

    /// Frames must be strictly increasing.
    static Trajectory from_visits(std::string user_id, std::span<const Visit> visits);

    const std::string& user_id() const
    {
        return m_user_id;
    }
    std::span<const Stay> stays() const
    {
        return m_stays;
    }
    std::vector<Visit> visits() const;
    std::size_t num_visits() const;
    bool empty() const
    {
        return m_stays.empty();
    }

    std::optional<CellId> cell_at(FrameIndex frame) const;

    /// Throws std::invalid_argument if any cell or frame is out of range.
    void validate(const GridSpec& grid, const TimeFrameSpec& frames) const;

    bool operator==(const Trajectory&) const = default;

private:
    std::string m_user_id;
    std::vector<Stay> m_stays;
};

struct WorldModel {
    GridSpec grid;
    TimeFrameSpec frames;
    std::vector<Trajectory> trajectories;

    std::size_t population() const
    {
        return trajectories.size();
    }
    void validate() const;

    bool operator==(const WorldModel&) const = default;
};

struct RawPoint {
    std::string user_id;
    double timestamp = 0.0; ///< seconds since the start of frame 0
    Point2 position;
};

/// A raw record that cannot be discretized.
class InvalidRecord : public std::invalid_argument
{
public:
    InvalidRecord(std::size_t record_index, std::string user_id, const std::string& what);

    std::size_t record_index() const
    {
        return m_record_index;
    }
    const std::string& user_id() const
    {
        return m_user_id;
    }

private:
    std::size_t m_record_index;
    std::string m_user_id;
};

/**
 * Map raw positions to one cell per (user, frame).
 *
 * A point is taken to hold until the user's next point or the end of its own
 * frame, whichever comes first. For every frame containing at least one point
 * the user is assigned the cell with the longest total dwell in that frame,
 * ties going to the lowest cell id. Users appear in order of first record.
 */
std::vector<Trajectory> discretize(std::span<const RawPoint> points, const GridSpec& grid,
                                   const TimeFrameSpec& frames);

struct MobilityParams {
    int home_anchors       = 50;
    int work_anchors       = 10;
    double excursion_rate  = 1.0; ///< mean excursions per agent per day
    double mean_trip_cells = 3.0; ///< mean excursion distance in cells
    double work_start_hour = 8.0;
    double work_hours      = 9.0;
    double jitter_hours    = 1.0;

    void validate(const GridSpec& grid) const;
};

/**
 * Two-anchor commuting population.
 *
 * Each agent gets a home cell from a seeded set of residential anchors and a
 * work cell from a set of workplace anchors, commutes every day around
 * work_start_hour, and makes Poisson(excursion_rate) short trips per day to
 * cells an exponentially distributed distance away. Agent i draws from its own
 * stream derived from (seed, i).
 */
WorldModel generate_synthetic_world(std::size_t population, const GridSpec& grid, const TimeFrameSpec& frames,
                                    const MobilityParams& mobility, std::uint64_t seed);

/// Number of agents kept by sample_small_world.
std::size_t sample_size(std::size_t population, double fraction);

/**
 * Uniform sample without replacement of floor(fraction * M) trajectories.
 * Selected trajectories are returned unchanged in their original order.
 */
WorldModel sample_small_world(const WorldModel& world, double fraction, std::uint64_t seed);

} // namespace smallworld

#endif // SMALLWORLD_WORLD_H
