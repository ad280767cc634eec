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
#include "smallworld/seir.h"

#include <gtest/gtest.h>

#include <cmath>

using namespace smallworld;

namespace
{

/// Plain forward Euler on the bilinear SEIR system.
CompartmentState euler(const SeirParams& p, CompartmentState x, double t_end, double h)
{
    const auto steps = static_cast<std::size_t>(std::llround(t_end / h));
    for (std::size_t n = 0; n < steps; ++n) {
        const double inf = p.beta * x.s * x.i;
        const double ons = p.omega() * x.e;
        const double rec = p.gamma() * x.i;
        x = {x.s - h * inf, x.e + h * (inf - ons), x.i + h * (ons - rec), x.r + h * rec};
    }
    return x;
}

double rel(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

/// Everyone sits in one cell for the whole horizon.
WorldModel one_room(std::size_t m, FrameIndex horizon, std::int64_t frame_s = 60)
{
    WorldModel w{GridSpec{1, 1, 1.0, {}}, TimeFrameSpec{frame_s, horizon}, {}};
    for (std::size_t a = 0; a < m; ++a) {
        w.trajectories.emplace_back(std::to_string(a), std::vector<Stay>{{0, horizon, 0}});
    }
    return w;
}

WorldModel town(std::size_t m, std::uint64_t seed)
{
    MobilityParams mob;
    mob.home_anchors = 40;
    mob.work_anchors = 8;
    return generate_synthetic_world(m, GridSpec{8, 8, 400.0, {}}, TimeFrameSpec{300, 288 * 6}, mob, seed);
}

} // namespace

TEST(SeirParams, Validation)
{
    EXPECT_THROW((SeirParams{-1.0, 1.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((SeirParams{1.0, 0.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((ContactModel{0.1, 1.5}.validate()), std::invalid_argument);
    EXPECT_DOUBLE_EQ((SeirParams{0.0, 4.0, 5.0}.omega()), 0.25);
}

TEST(IntegrateSeir, NoInfectionStaysPut)
{
    const auto s = integrate_seir({0.3, 2.0, 4.0}, {100.0, 0.0, 0.0, 0.0}, 0.1, 200);
    ASSERT_EQ(s.states.size(), 201u);
    for (const auto& x : s.states) {
        EXPECT_EQ(x, (CompartmentState{100.0, 0.0, 0.0, 0.0}));
    }
}

TEST(IntegrateSeir, LinearChainMatchesClosedForm)
{
    // With beta = 0 the E and I compartments decay as a two-stage linear chain.
    const SeirParams p{0.0, 2.0, 5.0};
    const double w = p.omega(), g = p.gamma();
    const auto s   = integrate_seir(p, {0.0, 10.0, 0.0, 0.0}, 0.01, 2000);
    for (std::size_t k : {100u, 700u, 2000u}) {
        const double t = 0.01 * static_cast<double>(k);
        EXPECT_NEAR(s.states[k].e, 10.0 * std::exp(-w * t), 1e-9);
        EXPECT_NEAR(s.states[k].i, 10.0 * w / (g - w) * (std::exp(-w * t) - std::exp(-g * t)), 1e-9);
    }
}

TEST(IntegrateSeir, TracksEulerOracle)
{
    const SeirParams p{3e-4, 5.0, 10.0};
    const CompartmentState x0{999.0, 0.0, 1.0, 0.0};
    const auto s = integrate_seir(p, x0, 0.01, 3000);
    for (double t : {5.0, 15.0, 30.0}) {
        const auto ref = euler(p, x0, t, 1e-5);
        const auto& x  = s.states[static_cast<std::size_t>(std::llround(t / 0.01))];
        EXPECT_LT(rel(x.s, ref.s), 1e-4) << t;
        EXPECT_LT(rel(x.e, ref.e), 1e-4) << t;
        EXPECT_LT(rel(x.i, ref.i), 1e-4) << t;
        EXPECT_LT(rel(x.r, ref.r), 1e-4) << t;
    }
}

TEST(IntegrateSeir, ConservesPopulationAndStaysNonNegative)
{
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int draw = 0; draw < 10; ++draw) {
        const SeirParams p{2.0 * u(rng), 0.5 + 5 * u(rng), 0.5 + 10 * u(rng)};
        const double n = 1.0 + 999.0 * u(rng);
        const double i0 = n * 0.01 * u(rng);
        const auto s    = integrate_seir({p.beta / n, p.t_e, p.t_r}, {n - i0, 0.0, i0, 0.0}, 0.05, 4000);
        double prev_r   = 0.0;
        for (const auto& x : s.states) {
            EXPECT_NEAR(x.total(), n, 1e-9 * n);
            EXPECT_GE(x.s, -1e-9);
            EXPECT_GE(x.i, -1e-9);
            EXPECT_GE(x.r, prev_r - 1e-12);
            prev_r = x.r;
        }
    }
}

TEST(IntegrateSeir, RejectsBadInput)
{
    EXPECT_THROW(integrate_seir({0.1, 1.0, 1.0}, {-1.0, 0.0, 0.0, 0.0}, 0.1, 1), std::invalid_argument);
    EXPECT_THROW(integrate_seir({0.1, 1.0, 1.0}, {1.0, 0.0, 0.0, 0.0}, 0.0, 1), std::invalid_argument);
    EXPECT_THROW(integrate_seir({0.1, 0.01, 1.0}, {0.0, 1.0, 0.0, 0.0}, 1.0, 5), std::domain_error);
}

TEST(Markov, ExposureEntryIsBetaTimesInfectiousTimesDt)
{
    const auto mk = build_markov({0.3, 4.0, 5.0}, 10.0, 1e-6);
    EXPECT_NEAR(mk.p[0][1], 3e-6, 1e-18);
    EXPECT_NEAR(mk.p[0][0], 1.0 - 3e-6, 1e-15);
    EXPECT_NEAR(mk.p[1][2], 0.25e-6, 1e-18);
    EXPECT_NEAR(mk.p[2][3], 0.2e-6, 1e-18);
    EXPECT_EQ(mk.p[3][3], 1.0);
    for (const auto& row : mk.p) {
        double sum = 0.0;
        for (double v : row) {
            EXPECT_GE(v, 0.0);
            sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-15);
    }
}

TEST(Markov, ZeroStepIsIdentity)
{
    const auto mk = build_markov({3e-4, 5.0, 10.0}, 1.0, 0.0);
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            EXPECT_EQ(mk.p[a][b], a == b ? 1.0 : 0.0);
        }
    }
    const CompartmentState x{3.0, 2.0, 1.0, 4.0};
    EXPECT_EQ(step_markov(x, mk), x);
}

TEST(Markov, HandProductForExposure)
{
    EXPECT_NEAR(build_markov({3e-4, 5.0, 10.0}, 1.0, 0.01).p[0][1], 3e-6, 1e-18);
}

TEST(Markov, FineStepsTrackOde)
{
    const SeirParams p{0.5, 3.0, 5.0};
    const CompartmentState x0{0.99, 0.0, 0.01, 0.0};
    const auto mk  = iterate_markov(p, x0, 1e-4, 300000);
    const auto ode = integrate_seir(p, x0, 1e-2, 3000);
    for (std::size_t k = 100; k <= 3000; k += 100) {
        const auto& a = mk.states[k * 100];
        const auto& b = ode.states[k];
        EXPECT_LT(rel(a.s, b.s), 1e-3);
        EXPECT_LT(rel(a.e, b.e), 1e-3);
        EXPECT_LT(rel(a.i, b.i), 1e-3);
        EXPECT_LT(rel(a.r, b.r), 1e-3);
        EXPECT_NEAR(a.total(), 1.0, 1e-12);
    }
}

TEST(Markov, StepMovesMassAlongRows)
{
    MarkovTransition mk;
    mk.p[0][0] = 0.7;
    mk.p[0][1] = 0.3;
    mk.p[1][1] = mk.p[2][2] = mk.p[3][3] = 1.0;
    const auto x = step_markov({1.0, 0.0, 0.0, 0.0}, mk);
    EXPECT_DOUBLE_EQ(x.s, 0.7);
    EXPECT_DOUBLE_EQ(x.e, 0.3);
    EXPECT_EQ(x.i, 0.0);
    EXPECT_EQ(x.r, 0.0);
}

TEST(Markov, RejectsStepsThatLeaveUnitInterval)
{
    EXPECT_THROW(build_markov({1.0, 1.0, 1.0}, 100.0, 0.1), std::domain_error);
    EXPECT_THROW(build_markov({1.0, 0.05, 1.0}, 0.0, 0.1), std::domain_error);
}

TEST(Markov, MatchesEulerExactly)
{
    const SeirParams p{0.4, 2.0, 3.0};
    const CompartmentState x0{0.98, 0.01, 0.01, 0.0};
    const auto s = iterate_markov(p, x0, 0.01, 1000);
    const auto e = euler(p, x0, 10.0, 0.01);
    EXPECT_NEAR(s.states.back().s, e.s, 1e-12);
    EXPECT_NEAR(s.states.back().i, e.i, 1e-12);
}

TEST(Markov, ErrorShrinksWithStep)
{
    const SeirParams p{0.6, 2.0, 4.0};
    const CompartmentState x0{0.99, 0.0, 0.01, 0.0};
    const double t_end = 30.0;
    const auto ref     = integrate_seir(p, x0, 1e-3, 30000).states.back();
    double prev        = 1e300;
    for (double dt : {1e-1, 1e-2, 1e-3}) {
        const auto x = iterate_markov(p, x0, dt, static_cast<std::size_t>(std::llround(t_end / dt))).states.back();
        const double err = std::max({std::abs(x.s - ref.s), std::abs(x.e - ref.e), std::abs(x.i - ref.i)});
        EXPECT_LT(err, prev / 5.0) << dt;
        prev = err;
    }
}

TEST(Agents, NothingHappensWithoutInfected)
{
    const WorldModel w = town(200, 1);
    const auto run     = simulate_agents(w, {0, 1, 3}, {0.01, 0.5}, std::size_t{0}, 3);
    for (const auto& x : run.series.states) {
        EXPECT_EQ(x, (CompartmentState{200, 0, 0, 0}));
    }
}

TEST(Agents, NoTransmissionOnlyRecovers)
{
    const WorldModel w = town(300, 1);
    const auto run     = simulate_agents(w, {0, 1, 0.5}, {0.01, 0.0}, std::size_t{5}, 3);
    EXPECT_EQ(run.series.states.back(), (CompartmentState{295, 0, 0, 5}));
    for (const auto& x : run.series.states) {
        EXPECT_EQ(x.e, 0.0);
    }
}

TEST(Agents, SeriesLayoutAndDeterminism)
{
    const WorldModel w = town(400, 2);
    const AgentSimOptions opts{86400.0, true};
    const auto a = simulate_agents(w, {0, 1, 3}, {0.05, 0.5}, std::size_t{4}, 99, opts);
    const auto b = simulate_agents(w, {0, 1, 3}, {0.05, 0.5}, std::size_t{4}, 99, opts);
    const auto c = simulate_agents(w, {0, 1, 3}, {0.05, 0.5}, std::size_t{4}, 100, opts);
    EXPECT_EQ(a.series, b.series);
    EXPECT_EQ(a.initial_agents, b.initial_agents);
    EXPECT_NE(a.series, c.series);
    EXPECT_EQ(a.series.states.size(), w.frames.horizon + 1u);
    EXPECT_EQ(a.series.cell_infected.size(), (w.frames.horizon + 1u) * 64u);
    EXPECT_DOUBLE_EQ(a.series.dt, 300.0 / 86400.0);
    EXPECT_EQ(a.seed, 99u);
}

TEST(Agents, ConservationAndMonotoneCompartments)
{
    const WorldModel w = town(500, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto run = simulate_agents(w, {0, 1, 3}, {0.05, 0.5}, std::size_t{5}, seed, {86400.0, true});
        double prev_r = 0, prev_ever = 0;
        for (std::size_t k = 0; k < run.series.states.size(); ++k) {
            const auto& x = run.series.states[k];
            EXPECT_EQ(x.total(), 500.0);
            EXPECT_GE(x.r, prev_r);
            EXPECT_GE(x.ever_infected(), prev_ever);
            prev_r    = x.r;
            prev_ever = x.ever_infected();
            double in_cells = 0;
            for (std::size_t c = 0; c < 64; ++c) {
                in_cells += run.series.cell(k, c);
            }
            EXPECT_EQ(in_cells, x.i) << k;
        }
    }
}

TEST(Agents, FirstFrameExposureMatchesBinomialMean)
{
    // One room, S = 90 and I = 10, so the expected new exposures are S(1-(1-q)^I).
    const WorldModel w = one_room(100, 1);
    const ContactModel contact{0.002, 0.5};
    const double q        = 0.002 * 100 * 0.5;
    const double expected = 90.0 * (1.0 - std::pow(1.0 - q, 10.0));
    double mean           = 0.0;
    const int reps        = 4000;
    for (int s = 0; s < reps; ++s) {
        mean += simulate_agents(w, {0, 10, 10}, contact, std::size_t{10}, s).series.states[1].e / reps;
    }
    const double sd = std::sqrt(expected * (1.0 - expected / 90.0) / reps);
    EXPECT_NEAR(mean, expected, 5 * sd);
}

TEST(Agents, MeanInfectiousPeriodMatchesParameter)
{
    const WorldModel w = one_room(2000, 1440 * 12);
    const auto run     = simulate_agents(w, {0, 1, 2}, {0, 0}, std::size_t{2000}, 8);
    double area        = 0.0;
    for (const auto& x : run.series.states) {
        area += x.i / 2000.0 * run.series.dt;
    }
    EXPECT_NEAR(area, 2.0, 0.1);
}

TEST(Agents, AbsentAgentsNeitherInfectNorGetInfected)
{
    WorldModel w{GridSpec{1, 2, 1.0, {}}, TimeFrameSpec{60, 20}, {}};
    w.trajectories.emplace_back("sick", std::vector<Stay>{{0, 20, 0}});
    w.trajectories.emplace_back("away", std::vector<Stay>{{5, 20, 1}});
    w.trajectories.emplace_back("late", std::vector<Stay>{{10, 20, 0}});
    const auto run = simulate_agents(w, {0, 1000, 1000}, {1.0, 1.0}, std::vector<std::string>{"sick"}, 1);
    EXPECT_EQ(run.initial_agents, (std::vector<std::size_t>{0}));
    EXPECT_EQ(run.series.states[10].s, 2.0);
    EXPECT_EQ(run.series.states[11].s, 1.0);
    EXPECT_EQ(run.series.states.back().s, 1.0);
}

TEST(Agents, ClampIsCountedAndFlagged)
{
    const WorldModel w = one_room(50, 30);
    const auto run     = simulate_agents(w, {0, 1000, 1000}, {0.5, 0.01}, std::size_t{1}, 1);
    EXPECT_GT(run.evaluated_cell_frames, 0u);
    EXPECT_EQ(run.clamped_cell_frames, run.evaluated_cell_frames);
    EXPECT_TRUE(run.clamp_warning);
    const auto calm = simulate_agents(w, {0, 1000, 1000}, {0.001, 0.01}, std::size_t{1}, 1);
    EXPECT_EQ(calm.clamped_cell_frames, 0u);
    EXPECT_FALSE(calm.clamp_warning);
}

TEST(Agents, RejectsBadInitialInfected)
{
    const WorldModel w = one_room(5, 10);
    EXPECT_THROW(simulate_agents(w, {0, 1, 1}, {0, 0}, std::size_t{6}, 1), std::invalid_argument);
    EXPECT_THROW(simulate_agents(w, {0, 1, 1}, {0, 0}, std::vector<std::string>{"9"}, 1), std::invalid_argument);
    EXPECT_THROW(simulate_agents(w, {0, 1, 1}, {0, 0}, std::vector<std::string>{"1", "1"}, 1),
                 std::invalid_argument);
    EXPECT_THROW(simulate_agents(one_room(5, 10, 86400), {0, 0.5, 1}, {0, 0}, std::size_t{1}, 1),
                 std::domain_error);
}

TEST(Agents, StayingHomeNeverRaisesAttackRate)
{
    const WorldModel w      = town(600, 4);
    const WorldModel pinned = apply_policy(w, StayHome{1.0, 0});
    const SeirParams p{0, 1, 3};
    const ContactModel contact{0.02, 0.5};
    double free_mean = 0, home_mean = 0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = derive_seed(5, "t", s);
        free_mean += simulate_agents(w, p, contact, std::size_t{6}, seed).series.states.back().ever_infected();
        home_mean += simulate_agents(pinned, p, contact, std::size_t{6}, seed).series.states.back().ever_infected();
    }
    EXPECT_LE(home_mean / seeds, free_mean / seeds);
}

TEST(Agents, WellMixedRoomFollowsOde)
{
    // Daily frames in a single room reduce to the discrete chain at per-pair rate cc*tp.
    const std::size_t m   = 2000;
    const WorldModel w    = one_room(m, 1440 * 40);
    const double r0       = 2.0;
    const SeirParams p{0, 2.0, 4.0};
    const double frame_dt = 60.0 / 86400.0;
    const double beta     = r0 / (p.t_r * m);
    const ContactModel contact{beta * frame_dt / (m * 1.0), 1.0};
    const auto ode = integrate_seir({beta, p.t_e, p.t_r}, {m - 40.0, 0, 40.0, 0}, 0.01, 4000);
    double final_r = 0;
    const int reps = 10;
    for (int s = 0; s < reps; ++s) {
        final_r += simulate_agents(w, p, contact, std::size_t{40}, s).series.states.back().r / reps;
    }
    EXPECT_NEAR(final_r / ode.states.back().r, 1.0, 0.05);
}
