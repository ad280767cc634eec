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

#include "smallworld/world.h"
#include "smallworld/random.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <unordered_map>

namespace smallworld
{

std::optional<CellId> GridSpec::locate(Point2 p) const
{
    const double fx = (p.x - origin.x) / cell_size;
    const double fy = (p.y - origin.y) / cell_size;
    if (!(fx >= 0.0) || !(fy >= 0.0) || fx >= cols || fy >= rows) {
        return std::nullopt;
    }
    const int col = std::min(static_cast<int>(fx), cols - 1);
    const int row = std::min(static_cast<int>(fy), rows - 1);
    return cell_id(row, col);
}

void GridSpec::validate() const
{
    if (rows < 1 || cols < 1) {
        throw std::invalid_argument("grid must have at least one row and one column");
    }
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
        throw std::invalid_argument("grid cell_size must be positive");
    }
    if (num_cells() > std::numeric_limits<CellId>::max()) {
        throw std::invalid_argument("grid has too many cells");
    }
}

void TimeFrameSpec::validate() const
{
    if (frame_duration <= 0) {
        throw std::invalid_argument("frame_duration must be positive");
    }
    if (seconds_per_day % frame_duration != 0) {
        throw std::invalid_argument("frame_duration must divide one day evenly");
    }
    if (horizon < 1) {
        throw std::invalid_argument("horizon must be at least one frame");
    }
}

Trajectory::Trajectory(std::string user_id, std::vector<Stay> stays)
    : m_user_id(std::move(user_id))
{
    m_stays.reserve(stays.size());
    for (const Stay& stay : stays) {
        if (stay.end <= stay.begin) {
            throw std::invalid_argument("stay of user " + m_user_id + " is empty or reversed");
        }
        if (!m_stays.empty()) {
            Stay& last = m_stays.back();
            if (stay.begin < last.end) {
                throw std::invalid_argument("stays of user " + m_user_id + " overlap or are unsorted");
            }
            if (stay.begin == last.end && stay.cell == last.cell) {
                last.end = stay.end;
                continue;
            }
        }
        m_stays.push_back(stay);
    }
}

Trajectory Trajectory::from_visits(std::string user_id, std::span<const Visit> visits)
{
    std::vector<Stay> stays;
    for (std::size_t k = 0; k < visits.size(); ++k) {
        const Visit& v = visits[k];
        if (k > 0 && v.frame <= visits[k - 1].frame) {
            throw std::invalid_argument("visit frames of user " + user_id + " are not strictly increasing");
        }
        if (!stays.empty() && stays.back().end == v.frame && stays.back().cell == v.cell) {
            ++stays.back().end;
        }
        else {
            stays.push_back({v.frame, v.frame + 1, v.cell});
        }
    }
    return Trajectory(std::move(user_id), std::move(stays));
}

std::vector<Visit> Trajectory::visits() const
{
    std::vector<Visit> out;
    out.reserve(num_visits());
    for (const Stay& stay : m_stays) {
        for (FrameIndex f = stay.begin; f < stay.end; ++f) {
            out.push_back({f, stay.cell});
        }
    }
    return out;
}

std::size_t Trajectory::num_visits() const
{
    std::size_t n = 0;
    for (const Stay& stay : m_stays) {
        n += stay.end - stay.begin;
    }
    return n;
}

std::optional<CellId> Trajectory::cell_at(FrameIndex frame) const
{
    auto it = std::upper_bound(m_stays.begin(), m_stays.end(), frame, [](FrameIndex f, const Stay& s) {
        return f < s.end;
    });
    if (it == m_stays.end() || frame < it->begin) {
        return std::nullopt;
    }
    return it->cell;
}

void Trajectory::validate(const GridSpec& grid, const TimeFrameSpec& frames) const
{
    for (const Stay& stay : m_stays) {
        if (stay.cell >= grid.num_cells()) {
            throw std::invalid_argument("user " + m_user_id + " visits cell " + std::to_string(stay.cell) +
                                        " outside the grid");
        }
        if (stay.end > frames.horizon) {
            throw std::invalid_argument("user " + m_user_id + " has visits beyond the horizon");
        }
    }
}

void WorldModel::validate() const
{
    grid.validate();
    frames.validate();
    for (const Trajectory& t : trajectories) {
        t.validate(grid, frames);
    }
}

InvalidRecord::InvalidRecord(std::size_t record_index, std::string user_id, const std::string& what)
    : std::invalid_argument("record " + std::to_string(record_index) + " (user " + user_id + "): " + what)
    , m_record_index(record_index)
    , m_user_id(std::move(user_id))
{
}

std::vector<Trajectory> discretize(std::span<const RawPoint> points, const GridSpec& grid,
                                   const TimeFrameSpec& frames)
{
    grid.validate();
    frames.validate();
    const double duration = static_cast<double>(frames.frame_duration);
    const double end_time = duration * frames.horizon;

    struct Located {
        double t;
        CellId cell;
    };
    std::unordered_map<std::string, std::size_t> index_of;
    std::vector<std::string> users;
    std::vector<std::vector<Located>> per_user;

    for (std::size_t k = 0; k < points.size(); ++k) {
        const RawPoint& p = points[k];
        if (!(p.timestamp >= 0.0) || !(p.timestamp < end_time)) {
            throw InvalidRecord(k, p.user_id, "timestamp outside the simulation horizon");
        }
        auto cell = grid.locate(p.position);
        if (!cell) {
            throw InvalidRecord(k, p.user_id, "position outside the grid");
        }
        auto [it, inserted] = index_of.try_emplace(p.user_id, users.size());
        if (inserted) {
            users.push_back(p.user_id);
            per_user.emplace_back();
        }
        auto& seq = per_user[it->second];
        if (!seq.empty() && p.timestamp < seq.back().t) {
            throw InvalidRecord(k, p.user_id, "timestamps of this user are not monotone");
        }
        seq.push_back({p.timestamp, *cell});
    }

    std::vector<Trajectory> out;
    out.reserve(users.size());
    std::vector<std::pair<CellId, double>> dwell;
    for (std::size_t u = 0; u < users.size(); ++u) {
        const auto& seq = per_user[u];
        std::vector<Visit> visits;
        FrameIndex current = 0;
        auto flush = [&] {
            auto best = dwell.front();
            for (const auto& d : dwell) {
                if (d.second > best.second || (d.second == best.second && d.first < best.first)) {
                    best = d;
                }
            }
            visits.push_back({current, best.first});
            dwell.clear();
        };
        for (std::size_t j = 0; j < seq.size(); ++j) {
            const auto frame = static_cast<FrameIndex>(std::floor(seq[j].t / duration));
            if (!dwell.empty() && frame != current) {
                flush();
            }
            current          = frame;
            double until     = (frame + 1.0) * duration;
            if (j + 1 < seq.size()) {
                until = std::min(until, seq[j + 1].t);
            }
            const double amount = until - seq[j].t;
            auto it = std::find_if(dwell.begin(), dwell.end(), [&](const auto& d) {
                return d.first == seq[j].cell;
            });
            if (it == dwell.end()) {
                dwell.emplace_back(seq[j].cell, amount);
            }
            else {
                it->second += amount;
            }
        }
        if (!dwell.empty()) {
            flush();
        }
        out.push_back(Trajectory::from_visits(users[u], visits));
    }
    return out;
}

void MobilityParams::validate(const GridSpec& grid) const
{
    if (home_anchors < 1 || work_anchors < 1) {
        throw std::invalid_argument("anchor counts must be at least 1");
    }
    if (static_cast<std::size_t>(home_anchors) > grid.num_cells() ||
        static_cast<std::size_t>(work_anchors) > grid.num_cells()) {
        throw std::invalid_argument("grid has fewer cells than the requested anchor count");
    }
    if (!(excursion_rate >= 0.0) || !std::isfinite(excursion_rate)) {
        throw std::invalid_argument("excursion_rate must be non-negative");
    }
    if (!(mean_trip_cells > 0.0)) {
        throw std::invalid_argument("mean_trip_cells must be positive");
    }
    if (!(work_hours >= 0.0) || !(jitter_hours >= 0.0) || !(work_start_hour >= 0.0) || work_start_hour > 24.0) {
        throw std::invalid_argument("commute schedule hours are out of range");
    }
}

namespace
{

std::vector<Stay> compress(const std::vector<CellId>& per_frame)
{
    std::vector<Stay> stays;
    for (FrameIndex f = 0; f < per_frame.size(); ++f) {
        if (!stays.empty() && stays.back().cell == per_frame[f]) {
            ++stays.back().end;
        }
        else {
            stays.push_back({f, f + 1, per_frame[f]});
        }
    }
    return stays;
}

} // namespace

WorldModel generate_synthetic_world(std::size_t population, const GridSpec& grid, const TimeFrameSpec& frames,
                                    const MobilityParams& mobility, std::uint64_t seed)
{
    if (population == 0) {
        throw std::invalid_argument("population must be at least 1");
    }
    grid.validate();
    frames.validate();
    mobility.validate(grid);

    std::vector<CellId> cells(grid.num_cells());
    std::iota(cells.begin(), cells.end(), CellId{0});
    Rng anchor_rng = make_rng(seed, "anchors");
    std::shuffle(cells.begin(), cells.end(), anchor_rng);
    const std::vector<CellId> homes(cells.begin(), cells.begin() + mobility.home_anchors);
    std::shuffle(cells.begin(), cells.end(), anchor_rng);
    const std::vector<CellId> works(cells.begin(), cells.begin() + mobility.work_anchors);

    const FrameIndex per_day  = frames.frames_per_day();
    const FrameIndex horizon  = frames.horizon;
    const double frames_per_h = 3600.0 / static_cast<double>(frames.frame_duration);
    auto hour_frame           = [&](double hour) {
        return static_cast<FrameIndex>(std::clamp(std::llround(hour * frames_per_h), 0LL,
                                                            static_cast<long long>(per_day)));
    };

    WorldModel world{grid, frames, {}};
    world.trajectories.reserve(population);
    std::vector<CellId> buffer(horizon);

    for (std::size_t agent = 0; agent < population; ++agent) {
        Rng rng = make_rng(seed, "agent", agent);
        std::uniform_int_distribution<std::size_t> pick_home(0, homes.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_work(0, works.size() - 1);
        const CellId home = homes[pick_home(rng)];
        const CellId work = works[pick_work(rng)];

        std::normal_distribution<double> noise(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto fill = [&](FrameIndex day_start, FrameIndex from, FrameIndex to, CellId cell) {
            for (FrameIndex f = day_start + from; f < day_start + to && f < horizon; ++f) {
                buffer[f] = cell;
            }
        };

        for (FrameIndex day_start = 0; day_start < horizon; day_start += per_day) {
            const double depart_h = std::clamp(mobility.work_start_hour + mobility.jitter_hours * noise(rng), 0.0, 24.0);
            const double return_h =
                std::clamp(depart_h + mobility.work_hours + 0.5 * mobility.jitter_hours * noise(rng), depart_h, 24.0);
            const FrameIndex depart = hour_frame(depart_h);
            const FrameIndex back   = hour_frame(return_h);
            fill(day_start, 0, depart, home);
            fill(day_start, depart, back, work);
            fill(day_start, back, per_day, home);

            int excursions = 0;
            if (mobility.excursion_rate > 0.0) {
                excursions = std::poisson_distribution<int>(mobility.excursion_rate)(rng);
            }
            for (int e = 0; e < excursions; ++e) {
                const double start_h    = 6.0 + 16.0 * unit(rng);
                const double duration_h = (20.0 + 100.0 * unit(rng)) / 60.0;
                const FrameIndex from   = hour_frame(start_h);
                const FrameIndex to     = std::max(hour_frame(start_h + duration_h), from + 1);
                const FrameIndex at     = std::min(day_start + from, horizon - 1);
                const CellId origin     = buffer[at];
                const double distance =
                    std::max(1.0, std::round(std::exponential_distribution<double>(1.0 / mobility.mean_trip_cells)(rng)));
                const double angle = 2.0 * std::numbers::pi * unit(rng);
                const int row = std::clamp(grid.row_of(origin) + static_cast<int>(std::lround(distance * std::sin(angle))),
                                           0, grid.rows - 1);
                const int col = std::clamp(grid.col_of(origin) + static_cast<int>(std::lround(distance * std::cos(angle))),
                                           0, grid.cols - 1);
                fill(day_start, from, std::min(to, per_day), grid.cell_id(row, col));
            }
        }
        world.trajectories.emplace_back(std::to_string(agent), compress(buffer));
    }
    return world;
}

std::size_t sample_size(std::size_t population, double fraction)
{
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw std::invalid_argument("sampling fraction must lie in (0, 1]");
    }
    // The epsilon absorbs representation error such as 0.29 * 100 = 28.999999999999996.
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(population) + 1e-9));
}

WorldModel sample_small_world(const WorldModel& world, double fraction, std::uint64_t seed)
{
    const std::size_t m = world.population();
    const std::size_t keep = sample_size(m, fraction);
    if (keep < 1) {
        throw std::invalid_argument("sampling fraction selects no agents");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed, "sample");
    for (std::size_t k = 0; k < keep; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, m - 1);
        std::swap(order[k], order[pick(rng)]);
    }
    order.resize(keep);
    std::sort(order.begin(), order.end());

    WorldModel small{world.grid, world.frames, {}};
    small.trajectories.reserve(keep);
    for (std::size_t idx : order) {
        small.trajectories.push_back(world.trajectories[idx]);
    }
    return small;
}

} // namespace smallworld
