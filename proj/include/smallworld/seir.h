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

#ifndef SMALLWORLD_SEIR_H
#define SMALLWORLD_SEIR_H

#include "smallworld/world.h"

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace smallworld
{

/// Rate constants; times are in the caller's time unit (days for the agent engine).
struct SeirParams {
    double beta = 0.0; ///< infection coefficient of the bilinear beta*S*I term
    double t_e  = 1.0; ///< mean latency
    double t_r  = 1.0; ///< mean recovery time

    double omega() const
    {
        return 1.0 / t_e;
    }
    double gamma() const
    {
        return 1.0 / t_r;
    }
    void validate() const;
};

struct CompartmentState {
    double s = 0.0;
    double e = 0.0;
    double i = 0.0;
    double r = 0.0;

    double total() const
    {
        return s + e + i + r;
    }
    /// E + I + R, everyone infected so far.
    double ever_infected() const
    {
        return e + i + r;
    }
    bool operator==(const CompartmentState&) const = default;
};

/**
 * State trajectory of one run. Entry k is the state after k steps (frames for
 * the agent engine), so entry 0 is the initial state.
 *
 * cell_infected is optional: when present it holds states.size() rows of
 * n_cells infectious counts, row-major, counting only agents present in a cell.
 */
struct EpidemicSeries {
    std::vector<CompartmentState> states;
    double dt = 1.0; ///< time between consecutive entries
    std::size_t n_cells = 0;
    std::vector<double> cell_infected;

    bool has_cells() const
    {
        return !cell_infected.empty();
    }
    double cell(std::size_t entry, std::size_t cell_id) const
    {
        return cell_infected[entry * n_cells + cell_id];
    }
    double population() const
    {
        return states.empty() ? 0.0 : states.front().total();
    }
    bool operator==(const EpidemicSeries&) const = default;
};

/**
 * Fixed-step RK4 solution of
 *   S' = -beta S I,  E' = beta S I - omega E,  I' = omega E - gamma I,  R' = gamma I.
 * Returns steps + 1 states. Throws std::domain_error when a compartment drops
 * below -1e-9 * N, which means dt is too large for the rates.
 */
EpidemicSeries integrate_seir(const SeirParams& params, const CompartmentState& init, double dt, std::size_t steps);

/// Row-stochastic transition matrix over (S, E, I, R) for one step of length dt.
struct MarkovTransition {
    std::array<std::array<double, 4>, 4> p{};
    double dt = 0.0;
};

/**
 * One-step chain: S->E with beta*I*dt, E->I with omega*dt, I->R with gamma*dt,
 * R absorbing. `infectious` is the current I in the same units as the ODE.
 * Throws std::domain_error when any step probability leaves [0, 1].
 */
MarkovTransition build_markov(const SeirParams& params, double infectious, double dt);

/// state * mk as a row vector.
CompartmentState step_markov(const CompartmentState& state, const MarkovTransition& mk);

/// Repeated build_markov/step_markov, rebuilding the matrix from the current I each step.
EpidemicSeries iterate_markov(const SeirParams& params, const CompartmentState& init, double dt, std::size_t steps);

/**
 * Close contacts between co-located agents. Each S-I pair in a cell makes close
 * contact in a frame with probability min(1, contact_coeff * n_present), and a
 * close contact infects with transmission_prob.
 */
struct ContactModel {
    double contact_coeff     = 0.0;
    double transmission_prob = 0.0;

    void validate() const;
};

/// Either a number of uniformly chosen agents or an explicit list of user ids.
using InitialInfected = std::variant<std::size_t, std::vector<std::string>>;

struct AgentSimOptions {
    double time_unit_seconds = 86400.0; ///< length of one SeirParams time unit
    bool record_cells        = false;
};

struct AgentRun {
    EpidemicSeries series;
    std::uint64_t seed                  = 0;
    std::uint64_t evaluated_cell_frames = 0; ///< cell-frames with both S and I present
    std::uint64_t clamped_cell_frames   = 0;
    double clamp_ratio                  = 0.0;
    bool clamp_warning                  = false; ///< clamp_ratio above 1%
    std::vector<std::size_t> initial_agents;
};

/// Share of evaluated cell-frames above which a clamp warning is raised.
inline constexpr double clamp_warning_ratio = 0.01;

/**
 * Stochastic spatial SEIR over a world's trajectories.
 *
 * Initial infected agents start infectious. Within a frame all transitions are
 * drawn from the state at the start of the frame: susceptible agents are
 * exposed through close contacts in their current cell, E->I happens with
 * probability omega*frame_dt and I->R with gamma*frame_dt, where frame_dt is
 * the frame duration in SeirParams time units. Absent agents make no contacts.
 * Given the same inputs and seed the result is bit-identical.
 *
 * Contacts are never enumerated pairwise: a susceptible agent with I_c
 * infectious cell-mates escapes with probability (1 - q)^I_c, so the number of
 * new exposures in a cell is Binomial(S_c, 1 - (1 - q)^I_c) and the exposed
 * agents are a uniform subset of the S_c.
 */
AgentRun simulate_agents(const WorldModel& world, const SeirParams& params, const ContactModel& contact,
                         const InitialInfected& initial, std::uint64_t seed, const AgentSimOptions& options = {});

} // namespace smallworld

#endif // SMALLWORLD_SEIR_H
