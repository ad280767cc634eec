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

#ifndef SMALLWORLD_POLICY_H
#define SMALLWORLD_POLICY_H

#include "smallworld/metrics.h"
#include "smallworld/seir.h"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace smallworld
{

struct NoPolicy {
    bool operator==(const NoPolicy&) const = default;
};

/// Frames of day during which everyone is at home.
struct Curfew {
    std::vector<FrameIndex> restricted_frames;
    bool operator==(const Curfew&) const = default;
};

/// Visits to closed cells are spent at home instead.
struct Lockdown {
    std::vector<CellId> closed_cells;
    bool operator==(const Lockdown&) const = default;
};

/// A seeded uniform share of agents stays home for the whole horizon.
struct StayHome {
    double fraction    = 0.0;
    std::uint64_t seed = 0;
    bool operator==(const StayHome&) const = default;
};

/// Per agent and day, only the first max_distinct_cells_per_day cells visited are kept.
struct MobilityCap {
    std::uint32_t max_distinct_cells_per_day = 1;
    bool operator==(const MobilityCap&) const = default;
};

using PolicySpec = std::variant<NoPolicy, Curfew, Lockdown, StayHome, MobilityCap>;

/// "none", "curfew", "lockdown", "stay_home" or "mobility_cap".
std::string policy_type(const PolicySpec& policy);

/// Throws std::invalid_argument when the policy does not fit the world.
void validate_policy(const PolicySpec& policy, const WorldModel& world);

/// Most visited cell over the horizon, lowest id on ties. Throws on an empty trajectory.
CellId home_cell(const Trajectory& trajectory);

/**
 * Restrict mobility by redirecting affected visits to the agent's home cell.
 * Population, grid and frames are unchanged and absent frames stay absent.
 */
WorldModel apply_policy(const WorldModel& world, const PolicySpec& policy);

struct EpidemicSetup {
    SeirParams params;
    ContactModel contact;
    InitialInfected initial = std::size_t{0};
    AgentSimOptions options;
};

struct PolicyComparison {
    PolicySpec a;
    PolicySpec b;
    double idi_a        = 0.0;
    double idi_b        = 0.0;
    int exponent        = 1;
    double time_ratio   = 1.0; ///< spread-speed ratio a / b
    double factor_ratio = 1.0; ///< F_a / F_b
    double k            = 0.0;
    std::size_t seeds   = 0;
    EpidemicSeries mean_a;
    EpidemicSeries mean_b;
    double attack_rate_a          = 0.0;
    double attack_rate_b          = 0.0;
    double attack_rate_difference = 0.0; ///< a - b
};

/// Element-wise mean of several runs of equal length (compartments only).
EpidemicSeries mean_series(const std::vector<EpidemicSeries>& runs);

/// Final E + I + R over the population.
double attack_rate(const EpidemicSeries& series);

/**
 * Compare two policies on one world. Both policies are simulated with the same
 * seeds, derived from (root_seed, "compare", index), and IDIs are taken over
 * the whole horizon.
 */
PolicyComparison compare_policies(const WorldModel& world, const PolicySpec& a, const PolicySpec& b,
                                  const EpidemicSetup& setup, double k, std::size_t seeds,
                                  std::uint64_t root_seed, int exponent = 1);

} // namespace smallworld

#endif // SMALLWORLD_POLICY_H
