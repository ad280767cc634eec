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

#include "smallworld/seir.h"
#include "smallworld/random.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace smallworld
{

void SeirParams::validate() const
{
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw std::invalid_argument("beta must be non-negative");
    }
    if (!(t_e > 0.0) || !(t_r > 0.0)) {
        throw std::invalid_argument("t_e and t_r must be positive");
    }
}

void ContactModel::validate() const
{
    if (!(contact_coeff >= 0.0) || !std::isfinite(contact_coeff)) {
        throw std::invalid_argument("contact_coeff must be non-negative");
    }
    if (!(transmission_prob >= 0.0) || transmission_prob > 1.0) {
        throw std::invalid_argument("transmission_prob must lie in [0, 1]");
    }
}

namespace
{

CompartmentState derivative(const SeirParams& p, const CompartmentState& x)
{
    const double infection = p.beta * x.s * x.i;
    const double onset     = p.omega() * x.e;
    const double recovery  = p.gamma() * x.i;
    return {-infection, infection - onset, onset - recovery, recovery};
}

CompartmentState axpy(const CompartmentState& x, double a, const CompartmentState& d)
{
    return {x.s + a * d.s, x.e + a * d.e, x.i + a * d.i, x.r + a * d.r};
}

void check_state(const CompartmentState& x)
{
    if (x.s < 0.0 || x.e < 0.0 || x.i < 0.0 || x.r < 0.0) {
        throw std::invalid_argument("initial compartments must be non-negative");
    }
}

} // namespace

EpidemicSeries integrate_seir(const SeirParams& params, const CompartmentState& init, double dt, std::size_t steps)
{
    params.validate();
    check_state(init);
    if (!(dt > 0.0)) {
        throw std::invalid_argument("dt must be positive");
    }
    const double tolerance = -1e-9 * std::max(1.0, init.total());

    EpidemicSeries series;
    series.dt = dt;
    series.states.reserve(steps + 1);
    series.states.push_back(init);
    CompartmentState x = init;
    for (std::size_t n = 0; n < steps; ++n) {
        const CompartmentState k1 = derivative(params, x);
        const CompartmentState k2 = derivative(params, axpy(x, 0.5 * dt, k1));
        const CompartmentState k3 = derivative(params, axpy(x, 0.5 * dt, k2));
        const CompartmentState k4 = derivative(params, axpy(x, dt, k3));
        const double w            = dt / 6.0;
        x.s += w * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
        x.e += w * (k1.e + 2.0 * k2.e + 2.0 * k3.e + k4.e);
        x.i += w * (k1.i + 2.0 * k2.i + 2.0 * k3.i + k4.i);
        x.r += w * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
        if (x.s < tolerance || x.e < tolerance || x.i < tolerance || x.r < tolerance) {
            throw std::domain_error("negative compartment at step " + std::to_string(n + 1) +
                                    "; reduce dt");
        }
        series.states.push_back(x);
    }
    return series;
}

MarkovTransition build_markov(const SeirParams& params, double infectious, double dt)
{
    params.validate();
    if (!(dt >= 0.0) || !(infectious >= 0.0)) {
        throw std::domain_error("dt and infectious count must be non-negative");
    }
    const double exposure = params.beta * infectious * dt;
    const double onset    = params.omega() * dt;
    const double recovery = params.gamma() * dt;
    for (double prob : {exposure, onset, recovery}) {
        if (!(prob >= 0.0 && prob <= 1.0)) {
            throw std::domain_error("step probability outside [0, 1]; reduce dt");
        }
    }
    MarkovTransition mk;
    mk.dt      = dt;
    mk.p[0][0] = 1.0 - exposure;
    mk.p[0][1] = exposure;
    mk.p[1][1] = 1.0 - onset;
    mk.p[1][2] = onset;
    mk.p[2][2] = 1.0 - recovery;
    mk.p[2][3] = recovery;
    mk.p[3][3] = 1.0;
    return mk;
}

CompartmentState step_markov(const CompartmentState& state, const MarkovTransition& mk)
{
    const std::array<double, 4> x{state.s, state.e, state.i, state.r};
    std::array<double, 4> y{};
    for (std::size_t from = 0; from < 4; ++from) {
        for (std::size_t to = 0; to < 4; ++to) {
            y[to] += x[from] * mk.p[from][to];
        }
    }
    return {y[0], y[1], y[2], y[3]};
}

EpidemicSeries iterate_markov(const SeirParams& params, const CompartmentState& init, double dt, std::size_t steps)
{
    check_state(init);
    EpidemicSeries series;
    series.dt = dt;
    series.states.reserve(steps + 1);
    series.states.push_back(init);
    CompartmentState x = init;
    for (std::size_t n = 0; n < steps; ++n) {
        x = step_markov(x, build_markov(params, x.i, dt));
        series.states.push_back(x);
    }
    return series;
}

namespace
{

enum class Health : std::uint8_t
{
    Susceptible,
    Exposed,
    Infectious,
    Recovered,
};

constexpr std::int32_t absent = -1;

struct Move {
    std::uint32_t agent;
    std::int32_t cell;
};

/// Frame-indexed list of cell changes, built once per world.
struct MoveSchedule {
    std::vector<std::size_t> offsets;
    std::vector<Move> moves;
};

MoveSchedule build_schedule(const WorldModel& world)
{
    const FrameIndex horizon = world.frames.horizon;
    MoveSchedule sched;
    sched.offsets.assign(horizon + 1, 0);
    auto for_each_move = [&](auto&& emit) {
        for (std::uint32_t a = 0; a < world.trajectories.size(); ++a) {
            auto stays = world.trajectories[a].stays();
            for (std::size_t k = 0; k < stays.size(); ++k) {
                emit(stays[k].begin, Move{a, static_cast<std::int32_t>(stays[k].cell)});
                const bool continues = k + 1 < stays.size() && stays[k + 1].begin == stays[k].end;
                if (!continues && stays[k].end < horizon) {
                    emit(stays[k].end, Move{a, absent});
                }
            }
        }
    };
    for_each_move([&](FrameIndex f, const Move&) {
        ++sched.offsets[f + 1];
    });
    std::partial_sum(sched.offsets.begin(), sched.offsets.end(), sched.offsets.begin());
    sched.moves.resize(sched.offsets.back());
    std::vector<std::size_t> cursor(sched.offsets.begin(), sched.offsets.end() - 1);
    for_each_move([&](FrameIndex f, const Move& m) {
        sched.moves[cursor[f]++] = m;
    });
    return sched;
}

std::vector<std::size_t> choose_initial(const WorldModel& world, const InitialInfected& initial, Rng& rng)
{
    const std::size_t m = world.population();
    std::vector<std::size_t> chosen;
    if (const auto* count = std::get_if<std::size_t>(&initial)) {
        if (*count > m) {
            throw std::invalid_argument("initial_infected exceeds the population");
        }
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t k = 0; k < *count; ++k) {
            std::uniform_int_distribution<std::size_t> pick(k, m - 1);
            std::swap(order[k], order[pick(rng)]);
        }
        chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(*count));
    }
    else {
        const auto& ids = std::get<std::vector<std::string>>(initial);
        std::unordered_map<std::string, std::size_t> index_of;
        for (std::size_t a = 0; a < m; ++a) {
            index_of.emplace(world.trajectories[a].user_id(), a);
        }
        for (const std::string& id : ids) {
            auto it = index_of.find(id);
            if (it == index_of.end()) {
                throw std::invalid_argument("initial infected user " + id + " is not in the world");
            }
            chosen.push_back(it->second);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    if (std::adjacent_find(chosen.begin(), chosen.end()) != chosen.end()) {
        throw std::invalid_argument("initial infected list contains duplicates");
    }
    return chosen;
}

class AgentEngine
{
public:
    AgentEngine(const WorldModel& world, const SeirParams& params, const ContactModel& contact,
                const AgentSimOptions& options, std::uint64_t seed)
        : m_world(world)
        , m_contact(contact)
        , m_options(options)
        , m_rng(make_rng(seed, "simulate"))
        , m_n_cells(world.grid.num_cells())
        , m_horizon(world.frames.horizon)
    {
        const double frame_dt = static_cast<double>(world.frames.frame_duration) / options.time_unit_seconds;
        m_p_onset             = params.omega() * frame_dt;
        m_p_recovery          = params.gamma() * frame_dt;
        if (m_p_onset > 1.0 || m_p_recovery > 1.0) {
            throw std::domain_error("per-frame progression probability exceeds 1; use shorter frames");
        }
        const std::size_t m = world.population();
        m_health.assign(m, Health::Susceptible);
        m_cell.assign(m, absent);
        m_slot.assign(m, 0);
        m_present.assign(m_n_cells, 0);
        m_infectious.assign(m_n_cells, 0);
        m_susceptible.assign(m_n_cells, {});
        m_due.assign(m_horizon, {});
        m_counts.s = static_cast<double>(m);
        m_series.dt      = frame_dt;
        m_series.n_cells = options.record_cells ? m_n_cells : 0;
    }

    AgentRun run(const InitialInfected& initial)
    {
        AgentRun result;
        result.initial_agents = choose_initial(m_world, initial, m_rng);
        for (std::size_t a : result.initial_agents) {
            m_health[a] = Health::Infectious;
            m_counts.s -= 1.0;
            m_counts.i += 1.0;
            schedule(a, geometric(m_p_recovery));
        }

        const MoveSchedule sched = build_schedule(m_world);
        m_series.states.reserve(m_horizon + 1);
        m_series.states.push_back(m_counts);
        if (m_options.record_cells) {
            m_series.cell_infected.reserve((m_horizon + 1) * m_n_cells);
            std::vector<double> row(m_n_cells, 0.0);
            for (std::size_t a : result.initial_agents) {
                if (auto c = m_world.trajectories[a].cell_at(0)) {
                    row[*c] += 1.0;
                }
            }
            m_series.cell_infected.insert(m_series.cell_infected.end(), row.begin(), row.end());
        }

        std::vector<std::uint32_t> exposed;
        for (FrameIndex t = 0; t < m_horizon; ++t) {
            for (std::size_t k = sched.offsets[t]; k < sched.offsets[t + 1]; ++k) {
                move(sched.moves[k].agent, sched.moves[k].cell);
            }
            exposed.clear();
            contact_pass(exposed);
            progress(t);
            for (std::uint32_t a : exposed) {
                m_health[a] = Health::Exposed;
                m_counts.s -= 1.0;
                m_counts.e += 1.0;
                schedule(a, t + 1 + geometric(m_p_onset));
            }
            m_series.states.push_back(m_counts);
            if (m_options.record_cells) {
                m_series.cell_infected.insert(m_series.cell_infected.end(), m_infectious.begin(),
                                              m_infectious.end());
            }
        }

        result.series                = std::move(m_series);
        result.evaluated_cell_frames = m_evaluated;
        result.clamped_cell_frames   = m_clamped;
        result.clamp_ratio =
            m_evaluated == 0 ? 0.0 : static_cast<double>(m_clamped) / static_cast<double>(m_evaluated);
        result.clamp_warning = result.clamp_ratio > clamp_warning_ratio;
        return result;
    }

private:
    std::uint64_t geometric(double p)
    {
        if (p >= 1.0) {
            return 0;
        }
        if (p <= 0.0) {
            return m_horizon;
        }
        return std::geometric_distribution<std::uint64_t>(p)(m_rng);
    }

    void schedule(std::size_t agent, std::uint64_t frame)
    {
        if (frame < m_horizon) {
            m_due[frame].push_back(static_cast<std::uint32_t>(agent));
        }
    }

    void leave(std::uint32_t a)
    {
        const std::int32_t c = m_cell[a];
        if (c == absent) {
            return;
        }
        --m_present[c];
        if (m_health[a] == Health::Infectious) {
            m_infectious[c] -= 1.0;
        }
        else if (m_health[a] == Health::Susceptible) {
            remove_susceptible(a);
        }
        m_cell[a] = absent;
    }

    void join(std::uint32_t a, std::int32_t c)
    {
        m_cell[a] = c;
        if (c == absent) {
            return;
        }
        ++m_present[c];
        if (m_health[a] == Health::Infectious) {
            m_infectious[c] += 1.0;
        }
        else if (m_health[a] == Health::Susceptible) {
            auto& list = m_susceptible[c];
            m_slot[a]  = static_cast<std::uint32_t>(list.size());
            list.push_back(a);
        }
    }

    void move(std::uint32_t a, std::int32_t c)
    {
        if (m_cell[a] == c) {
            return;
        }
        leave(a);
        join(a, c);
    }

    void remove_susceptible(std::uint32_t a)
    {
        auto& list              = m_susceptible[m_cell[a]];
        const std::uint32_t pos = m_slot[a];
        const std::uint32_t last = list.back();
        list[pos]               = last;
        m_slot[last]            = pos;
        list.pop_back();
    }

    void contact_pass(std::vector<std::uint32_t>& exposed)
    {
        for (std::size_t c = 0; c < m_n_cells; ++c) {
            auto& list = m_susceptible[c];
            if (m_infectious[c] <= 0.0 || list.empty()) {
                continue;
            }
            ++m_evaluated;
            double close = m_contact.contact_coeff * static_cast<double>(m_present[c]);
            if (close > 1.0) {
                ++m_clamped;
                close = 1.0;
            }
            const double q = close * m_contact.transmission_prob;
            if (q <= 0.0) {
                continue;
            }
            const double p_infect = q >= 1.0 ? 1.0 : -std::expm1(m_infectious[c] * std::log1p(-q));
            const auto n_s        = static_cast<std::uint32_t>(list.size());
            std::uint32_t hits    = n_s;
            if (p_infect < 1.0) {
                hits = std::binomial_distribution<std::uint32_t>(n_s, p_infect)(m_rng);
            }
            // Move a uniform subset of size `hits` to the back of the list, then drop it.
            for (std::uint32_t j = 0; j < hits; ++j) {
                const std::uint32_t back = n_s - 1 - j;
                std::uniform_int_distribution<std::uint32_t> pick(0, back);
                const std::uint32_t r = pick(m_rng);
                std::swap(list[r], list[back]);
                m_slot[list[r]]    = r;
                m_slot[list[back]] = back;
            }
            for (std::uint32_t j = 0; j < hits; ++j) {
                exposed.push_back(list.back());
                list.pop_back();
            }
        }
    }

    void progress(FrameIndex t)
    {
        for (std::uint32_t a : m_due[t]) {
            const std::int32_t c = m_cell[a];
            if (m_health[a] == Health::Exposed) {
                m_health[a] = Health::Infectious;
                m_counts.e -= 1.0;
                m_counts.i += 1.0;
                if (c != absent) {
                    m_infectious[c] += 1.0;
                }
                schedule(a, t + 1 + geometric(m_p_recovery));
            }
            else if (m_health[a] == Health::Infectious) {
                m_health[a] = Health::Recovered;
                m_counts.i -= 1.0;
                m_counts.r += 1.0;
                if (c != absent) {
                    m_infectious[c] -= 1.0;
                }
            }
        }
        std::vector<std::uint32_t>().swap(m_due[t]);
    }

    const WorldModel& m_world;
    ContactModel m_contact;
    AgentSimOptions m_options;
    Rng m_rng;
    std::size_t m_n_cells;
    FrameIndex m_horizon;
    double m_p_onset    = 0.0;
    double m_p_recovery = 0.0;

    std::vector<Health> m_health;
    std::vector<std::int32_t> m_cell;
    std::vector<std::uint32_t> m_slot;
    std::vector<std::uint32_t> m_present;
    std::vector<double> m_infectious;
    std::vector<std::vector<std::uint32_t>> m_susceptible;
    std::vector<std::vector<std::uint32_t>> m_due;

    CompartmentState m_counts;
    EpidemicSeries m_series;
    std::uint64_t m_evaluated = 0;
    std::uint64_t m_clamped   = 0;
};

} // namespace

AgentRun simulate_agents(const WorldModel& world, const SeirParams& params, const ContactModel& contact,
                         const InitialInfected& initial, std::uint64_t seed, const AgentSimOptions& options)
{
    world.validate();
    params.validate();
    contact.validate();
    if (!(options.time_unit_seconds > 0.0)) {
        throw std::invalid_argument("time_unit_seconds must be positive");
    }
    AgentEngine engine(world, params, contact, options, seed);
    AgentRun run = engine.run(initial);
    run.seed     = seed;
    return run;
}

} // namespace smallworld
