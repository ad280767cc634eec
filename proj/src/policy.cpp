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

#include "smallworld/policy.h"
#include "smallworld/random.h"
#include "smallworld/scaling.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace smallworld
{

std::string policy_type(const PolicySpec& policy)
{
    struct Visitor {
        std::string operator()(const NoPolicy&) const
        {
            return "none";
        }
        std::string operator()(const Curfew&) const
        {
            return "curfew";
        }
        std::string operator()(const Lockdown&) const
        {
            return "lockdown";
        }
        std::string operator()(const StayHome&) const
        {
            return "stay_home";
        }
        std::string operator()(const MobilityCap&) const
        {
            return "mobility_cap";
        }
    };
    return std::visit(Visitor{}, policy);
}

void validate_policy(const PolicySpec& policy, const WorldModel& world)
{
    if (const auto* curfew = std::get_if<Curfew>(&policy)) {
        for (FrameIndex f : curfew->restricted_frames) {
            if (f >= world.frames.frames_per_day()) {
                throw std::invalid_argument("curfew frame " + std::to_string(f) + " is not a frame of day");
            }
        }
    }
    else if (const auto* lockdown = std::get_if<Lockdown>(&policy)) {
        for (CellId c : lockdown->closed_cells) {
            if (c >= world.grid.num_cells()) {
                throw std::invalid_argument("lockdown cell " + std::to_string(c) + " is outside the grid");
            }
        }
    }
    else if (const auto* stay = std::get_if<StayHome>(&policy)) {
        if (!(stay->fraction >= 0.0) || stay->fraction > 1.0) {
            throw std::invalid_argument("stay_home fraction must lie in [0, 1]");
        }
    }
    else if (const auto* cap = std::get_if<MobilityCap>(&policy)) {
        if (cap->max_distinct_cells_per_day < 1) {
            throw std::invalid_argument("mobility_cap must allow at least one cell per day");
        }
    }
}

CellId home_cell(const Trajectory& trajectory)
{
    if (trajectory.empty()) {
        throw std::invalid_argument("user " + trajectory.user_id() + " has no visits and no home cell");
    }
    std::map<CellId, std::size_t> frames_in;
    for (const Stay& stay : trajectory.stays()) {
        frames_in[stay.cell] += stay.end - stay.begin;
    }
    auto best = frames_in.begin();
    for (auto it = frames_in.begin(); it != frames_in.end(); ++it) {
        if (it->second > best->second) {
            best = it;
        }
    }
    return best->first;
}

namespace
{

template <class Rewrite>
Trajectory rewrite_visits(const Trajectory& t, Rewrite&& rewrite)
{
    std::vector<Visit> visits = t.visits();
    rewrite(visits);
    return Trajectory::from_visits(t.user_id(), visits);
}

Trajectory pin_home(const Trajectory& t)
{
    if (t.empty()) {
        return t;
    }
    const CellId home = home_cell(t);
    std::vector<Stay> stays(t.stays().begin(), t.stays().end());
    for (Stay& s : stays) {
        s.cell = home;
    }
    return Trajectory(t.user_id(), std::move(stays));
}

std::vector<bool> choose_pinned(std::size_t m, double fraction, std::uint64_t seed)
{
    const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m) + 1e-9));
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed, "stay_home");
    for (std::size_t k = 0; k < count; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, m - 1);
        std::swap(order[k], order[pick(rng)]);
    }
    std::vector<bool> pinned(m, false);
    for (std::size_t k = 0; k < count; ++k) {
        pinned[order[k]] = true;
    }
    return pinned;
}

} // namespace

WorldModel apply_policy(const WorldModel& world, const PolicySpec& policy)
{
    validate_policy(policy, world);
    WorldModel out{world.grid, world.frames, {}};
    out.trajectories.reserve(world.population());
    const FrameIndex per_day = world.frames.frames_per_day();

    if (std::holds_alternative<NoPolicy>(policy)) {
        out.trajectories = world.trajectories;
    }
    else if (const auto* curfew = std::get_if<Curfew>(&policy)) {
        std::vector<bool> restricted(per_day, false);
        for (FrameIndex f : curfew->restricted_frames) {
            restricted[f] = true;
        }
        for (const Trajectory& t : world.trajectories) {
            if (t.empty()) {
                out.trajectories.push_back(t);
                continue;
            }
            const CellId home = home_cell(t);
            out.trajectories.push_back(rewrite_visits(t, [&](std::vector<Visit>& visits) {
                for (Visit& v : visits) {
                    if (restricted[v.frame % per_day]) {
                        v.cell = home;
                    }
                }
            }));
        }
    }
    else if (const auto* lockdown = std::get_if<Lockdown>(&policy)) {
        std::vector<bool> closed(world.grid.num_cells(), false);
        for (CellId c : lockdown->closed_cells) {
            closed[c] = true;
        }
        for (const Trajectory& t : world.trajectories) {
            if (t.empty()) {
                out.trajectories.push_back(t);
                continue;
            }
            const CellId home = home_cell(t);
            std::vector<Stay> stays(t.stays().begin(), t.stays().end());
            for (Stay& s : stays) {
                if (closed[s.cell]) {
                    s.cell = home;
                }
            }
            out.trajectories.emplace_back(t.user_id(), std::move(stays));
        }
    }
    else if (const auto* stay = std::get_if<StayHome>(&policy)) {
        const std::vector<bool> pinned = choose_pinned(world.population(), stay->fraction, stay->seed);
        for (std::size_t a = 0; a < world.population(); ++a) {
            out.trajectories.push_back(pinned[a] ? pin_home(world.trajectories[a]) : world.trajectories[a]);
        }
    }
    else {
        const auto cap = std::get<MobilityCap>(policy).max_distinct_cells_per_day;
        for (const Trajectory& t : world.trajectories) {
            if (t.empty()) {
                out.trajectories.push_back(t);
                continue;
            }
            const CellId home = home_cell(t);
            out.trajectories.push_back(rewrite_visits(t, [&](std::vector<Visit>& visits) {
                std::vector<CellId> kept;
                FrameIndex day = 0;
                for (Visit& v : visits) {
                    if (v.frame / per_day != day) {
                        day = v.frame / per_day;
                        kept.clear();
                    }
                    if (std::find(kept.begin(), kept.end(), v.cell) != kept.end()) {
                        continue;
                    }
                    if (kept.size() < cap) {
                        kept.push_back(v.cell);
                    }
                    else {
                        v.cell = home;
                    }
                }
            }));
        }
    }
    return out;
}

EpidemicSeries mean_series(const std::vector<EpidemicSeries>& runs)
{
    if (runs.empty()) {
        throw std::invalid_argument("cannot average zero runs");
    }
    EpidemicSeries mean;
    mean.dt = runs.front().dt;
    mean.states.assign(runs.front().states.size(), CompartmentState{});
    for (const EpidemicSeries& run : runs) {
        if (run.states.size() != mean.states.size()) {
            throw std::invalid_argument("runs differ in length");
        }
        for (std::size_t k = 0; k < run.states.size(); ++k) {
            mean.states[k].s += run.states[k].s;
            mean.states[k].e += run.states[k].e;
            mean.states[k].i += run.states[k].i;
            mean.states[k].r += run.states[k].r;
        }
    }
    const auto n = static_cast<double>(runs.size());
    for (CompartmentState& x : mean.states) {
        x = {x.s / n, x.e / n, x.i / n, x.r / n};
    }
    return mean;
}

double attack_rate(const EpidemicSeries& series)
{
    const double n = series.population();
    return n > 0.0 ? series.states.back().ever_infected() / n : 0.0;
}

PolicyComparison compare_policies(const WorldModel& world, const PolicySpec& a, const PolicySpec& b,
                                  const EpidemicSetup& setup, double k, std::size_t seeds,
                                  std::uint64_t root_seed, int exponent)
{
    if (seeds < 1) {
        throw std::invalid_argument("compare_policies needs at least one seed");
    }
    const WorldModel world_a = apply_policy(world, a);
    const WorldModel world_b = apply_policy(world, b);
    const TimeWindow window  = TimeWindow::whole(world.frames);

    PolicyComparison cmp;
    cmp.a            = a;
    cmp.b            = b;
    cmp.idi_a        = compute_idi(world_a, window).idi;
    cmp.idi_b        = compute_idi(world_b, window).idi;
    cmp.exponent     = exponent;
    cmp.time_ratio   = time_scaling_ratio(cmp.idi_a, cmp.idi_b, exponent).ratio;
    cmp.factor_ratio = policy_factor_ratio(cmp.idi_a, cmp.idi_b, k);
    cmp.k            = k;
    cmp.seeds        = seeds;

    std::vector<EpidemicSeries> runs_a;
    std::vector<EpidemicSeries> runs_b;
    double attack_a = 0.0;
    double attack_b = 0.0;
    AgentSimOptions options = setup.options;
    options.record_cells    = false;
    for (std::size_t s = 0; s < seeds; ++s) {
        const std::uint64_t seed = derive_seed(root_seed, "compare", s);
        runs_a.push_back(simulate_agents(world_a, setup.params, setup.contact, setup.initial, seed, options).series);
        runs_b.push_back(simulate_agents(world_b, setup.params, setup.contact, setup.initial, seed, options).series);
        attack_a += attack_rate(runs_a.back());
        attack_b += attack_rate(runs_b.back());
    }
    cmp.mean_a                 = mean_series(runs_a);
    cmp.mean_b                 = mean_series(runs_b);
    cmp.attack_rate_a          = attack_a / static_cast<double>(seeds);
    cmp.attack_rate_b          = attack_b / static_cast<double>(seeds);
    cmp.attack_rate_difference = cmp.attack_rate_a - cmp.attack_rate_b;
    return cmp;
}

} // namespace smallworld
