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

#include "smallworld/harness.h"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

using namespace smallworld;
namespace fs = std::filesystem;

namespace
{

json base_config(const fs::path& out)
{
    json j = json::parse(R"({
      "seed": 7,
      "world": {"population": 400, "grid": {"rows": 6, "cols": 6, "cell_size": 400},
                "frames": {"frame_duration": 600, "horizon": 432},
                "mobility": {"home_anchors": 20, "work_anchors": 5}},
      "epidemic": {"t_e": 0.5, "t_r": 1.5, "contact_coeff": 0.004, "transmission_prob": 0.5,
                   "initial_infected_fraction": 0.02},
      "fractions": [0.1, 0.5],
      "policies": [{"type": "stay_home", "fraction": 0.5, "seed": 3},
                   {"type": "curfew", "from_hour": 22, "to_hour": 6}],
      "monte_carlo_seeds": 3
    })");
    j["output_dir"] = out.string();
    return j;
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("smallworld_harness_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir)
{
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            files[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
        }
    }
    return files;
}

std::string config_error_field(const json& j)
{
    try {
        parse_config(j);
    }
    catch (const ConfigError& e) {
        return e.field();
    }
    return "<none>";
}

} // namespace

TEST(Config, DefaultsAndDerivedValues)
{
    const ExperimentConfig c = parse_config(json::object());
    EXPECT_EQ(c.world.frames.frame_duration, 60);
    EXPECT_EQ(c.frame_multiplier(), 1440);
    EXPECT_EQ(c.report_interval(), 1440u);
    EXPECT_EQ(c.window(), (TimeWindow{0, 1440}));
    EXPECT_EQ(c.scaling.exponent, 1);
    EXPECT_EQ(c.epidemic.initial_for(1000), 10u);
    EXPECT_EQ(c.epidemic.initial_for(10), 1u);
}

TEST(Config, ParsesNestedSections)
{
    const ExperimentConfig c = parse_config(base_config("x"), "/base");
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.world.population, 400u);
    EXPECT_EQ(c.world.grid.rows, 6);
    EXPECT_EQ(c.frame_multiplier(), 144);
    EXPECT_EQ(c.fractions, (std::vector<double>{0.1, 0.5}));
    ASSERT_EQ(c.policies.size(), 2u);
    EXPECT_EQ(c.policies[0], (PolicySpec{StayHome{0.5, 3}}));
    const auto& curfew = std::get<Curfew>(c.policies[1]).restricted_frames;
    EXPECT_EQ(curfew.size(), 48u);
    EXPECT_EQ(curfew.front(), 132u);
    EXPECT_EQ(curfew.back(), 35u);
    EXPECT_EQ(c.output_dir, fs::path("/base/x"));
}

TEST(Config, ErrorsNameTheField)
{
    json j = base_config("x");
    j["world"]["grid"]["rows"] = 0;
    EXPECT_EQ(config_error_field(j), "world.grid");
    j = base_config("x");
    j["world"]["colour"] = 1;
    EXPECT_EQ(config_error_field(j), "world.colour");
    j = base_config("x");
    j["fractions"] = {0.5, 1.5};
    EXPECT_EQ(config_error_field(j), "fractions[1]");
    j = base_config("x");
    j["policies"][0]["fraction"] = -1;
    EXPECT_EQ(config_error_field(j), "policies[0]");
    j = base_config("x");
    j["policies"][1] = {{"type", "lockdown"}, {"closed_cells", {99}}};
    EXPECT_EQ(config_error_field(j), "policies[1]");
    j = base_config("x");
    j["monte_carlo_seeds"] = -3;
    EXPECT_EQ(config_error_field(j), "monte_carlo_seeds");
    j = base_config("x");
    j["scaling"] = {{"exponent", 2}};
    EXPECT_EQ(config_error_field(j), "scaling.exponent");
    j = base_config("x");
    j["epidemic"]["transmission_prob"] = "high";
    EXPECT_EQ(config_error_field(j), "epidemic.transmission_prob");
}

TEST(Pipeline, DeterministicAndComplete)
{
    const fs::path a = scratch("pipe_a"), b = scratch("pipe_b");
    const FileList files = run_pipeline(parse_config(base_config(a)));
    run_pipeline(parse_config(base_config(b)));
    const auto sa = snapshot(a);
    EXPECT_EQ(sa, snapshot(b));
    EXPECT_EQ(files.size(), sa.size());
    for (const char* name : {"world.json", "idi_real.json", "series_real.csv", "run_report_real.json",
                             "idi_small_0.json", "scaling_0.json", "scaling_1.json", "policy_0.json",
                             "policy_1_b.csv"}) {
        EXPECT_TRUE(sa.count(name)) << name;
    }
    std::size_t reports = 0;
    for (const auto& [name, _] : sa) {
        reports += name.rfind("scaling_", 0) == 0 ? 1 : 0;
    }
    EXPECT_EQ(reports, 2u);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Pipeline, OutputsParseWithOwnReaders)
{
    const fs::path dir = scratch("pipe_parse");
    json cfg           = base_config(dir);
    cfg["epidemic"]["record_cells"] = true;
    run_pipeline(parse_config(cfg));
    const auto w = parse_world_metadata(read_json_file(dir / "world.json"));
    EXPECT_EQ(w.population, 400u);
    const auto idi = read_json_file(dir / "idi_real.json").get<IdiReport>();
    EXPECT_EQ(idi.m, 400u);
    const auto rep = read_json_file(dir / "scaling_1.json").get<ScalingReport>();
    EXPECT_NEAR(rep.idi_small, 0.5 * idi.idi, 0.25 * idi.idi);
    EXPECT_EQ(rep.n, 144);
    std::ifstream series_in(dir / "series_real.csv");
    EpidemicSeries s = read_series_csv(series_in);
    EXPECT_EQ(s.states.size(), 433u);
    std::ifstream cells_in(dir / "cells_real.csv");
    read_cells_csv(cells_in, s, 36);
    EXPECT_EQ(s.cell_infected.size(), 433u * 36u);
    const json cmp = read_json_file(dir / "policy_0.json");
    EXPECT_EQ(policy_from_json(cmp.at("policy_a")), (PolicySpec{StayHome{0.5, 3}}));
    EXPECT_LE(cmp.at("idi_a").get<double>(), cmp.at("idi_b").get<double>());
    std::ifstream pa(dir / "policy_0_a.csv");
    EXPECT_EQ(read_series_csv(pa).states.size(), 433u);
    fs::remove_all(dir);
}

TEST(Pipeline, EmptyPolicyListSkipsComparisons)
{
    const fs::path dir = scratch("pipe_nopol");
    json cfg           = base_config(dir);
    cfg["policies"]    = json::array();
    run_pipeline(parse_config(cfg));
    const auto files = snapshot(dir);
    EXPECT_TRUE(files.count("scaling_0.json"));
    for (const auto& [name, _] : files) {
        EXPECT_NE(name.rfind("policy_", 0), 0u) << name;
    }
    fs::remove_all(dir);
}

TEST(Pipeline, FailureRemovesPartialOutputs)
{
    const fs::path dir = scratch("pipe_fail");
    json cfg           = base_config(dir);
    cfg["fractions"]   = {0.5, 0.001};
    EXPECT_THROW(run_pipeline(parse_config(cfg)), std::exception);
    EXPECT_TRUE(!fs::exists(dir) || fs::is_empty(dir));
    fs::remove_all(dir);
}

TEST(Stages, SubcommandsWriteExpectedFiles)
{
    const fs::path dir = scratch("stages");
    const ExperimentConfig c = parse_config(base_config(dir));
    EXPECT_EQ(run_generate(c).size(), 2u);
    const FileList sampled = run_sample(c);
    EXPECT_TRUE(fs::exists(dir / "small_1" / "trajectories.csv"));
    const WorldModel small = load_world(dir / "small_1" / "world.json", dir / "small_1" / "trajectories.csv");
    EXPECT_EQ(small.population(), 200u);
    std::ostringstream csv;
    run_idi(c, csv);
    const std::string table = csv.str();
    EXPECT_EQ(table.rfind("world,start_frame", 0), 0u);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
    run_simulate(c);
    EXPECT_TRUE(fs::exists(dir / "run_report.json"));
    run_scale(c);
    EXPECT_TRUE(fs::exists(dir / "scaling_1.json"));
    run_compare(c);
    EXPECT_TRUE(fs::exists(dir / "policy_1.json"));
    fs::remove_all(dir);
}

namespace
{

json validation_config(const fs::path& out)
{
    json j = base_config(out);
    j["world"]["population"]   = 1500;
    j["monte_carlo_seeds"]     = 20;
    j["policies"]              = json::array();
    j["scaling"]               = {{"threshold_fraction", 0.1}};
    return j;
}

} // namespace

TEST(Validate, FullFractionReproducesOracle)
{
    json cfg                                     = validation_config("unused");
    cfg["fractions"]                             = {0.5, 1.0};
    cfg["epidemic"]["initial_infected_fraction"] = 0.05;
    const ValidationReport rep                   = validate_scaling(parse_config(cfg));
    ASSERT_EQ(rep.rows.size(), 2u);
    const ValidationRow& full = rep.rows[1];
    EXPECT_EQ(full.fraction, 1.0);
    EXPECT_DOUBLE_EQ(full.idi_small, rep.idi_real);
    ASSERT_EQ(full.empirical_f.size(), rep.report_frames.size());
    for (const auto& f : full.empirical_f) {
        ASSERT_TRUE(f);
        EXPECT_NEAR(*f, 1.0, 0.1);
    }
    EXPECT_DOUBLE_EQ(*full.time_ratio_eq6, 1.0);
}

TEST(Validate, OrderingAcrossFractions)
{
    json cfg         = validation_config("unused");
    cfg["fractions"] = {0.5, 0.25, 0.1};
    cfg["world"]["population"] = 3000;
    const ValidationReport rep = validate_scaling(parse_config(cfg));
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_EQ(rep.rows[0].fraction, 0.1);
    EXPECT_TRUE(rep.idi_monotone);
    EXPECT_TRUE(rep.time_monotone);
    EXPECT_TRUE(rep.f_monotone);
    EXPECT_TRUE(rep.fit);
    EXPECT_TRUE(rep.closer_exponent);
    for (const ValidationRow& row : rep.rows) {
        EXPECT_NEAR(row.idi_small, row.fraction * rep.idi_real, 0.15 * row.fraction * rep.idi_real);
        EXPECT_NEAR(*row.time_ratio_eq5, std::pow(*row.time_ratio_eq6, 3), 1e-9);
    }
}

TEST(Validate, ZeroTransmissionNeverReachesThreshold)
{
    json cfg                             = validation_config("unused");
    cfg["epidemic"]["transmission_prob"] = 0.0;
    cfg["monte_carlo_seeds"]             = 10;
    const ValidationReport rep           = validate_scaling(parse_config(cfg));
    EXPECT_FALSE(rep.time_to_threshold_real);
    EXPECT_EQ(rep.reached_real, 0u);
    for (const ValidationRow& row : rep.rows) {
        EXPECT_FALSE(row.time_to_threshold_small);
        EXPECT_FALSE(row.time_ratio_empirical);
    }
    EXPECT_FALSE(rep.closer_exponent);

    cfg["epidemic"]["initial_infected_fraction"] = 0.0;
    const ValidationReport empty                 = validate_scaling(parse_config(cfg));
    for (const ValidationRow& row : empty.rows) {
        EXPECT_FALSE(row.f_empirical_mean);
        for (const auto& f : row.empirical_f) {
            EXPECT_FALSE(f);
        }
    }
    EXPECT_FALSE(empty.fit);
    std::ostringstream csv;
    write_validation_csv(csv, empty);
    EXPECT_NE(csv.str().find("0.1,"), std::string::npos);
}

TEST(Validate, PreconditionsAndFailureLabel)
{
    json cfg                 = validation_config("unused");
    cfg["monte_carlo_seeds"] = 5;
    EXPECT_THROW(validate_scaling(parse_config(cfg)), ConfigError);
    cfg                 = validation_config("unused");
    cfg["fractions"]    = {0.5};
    EXPECT_THROW(validate_scaling(parse_config(cfg)), ConfigError);
    cfg                        = validation_config("unused");
    cfg["epidemic"]["t_e"]     = 1e-4;
    try {
        validate_scaling(parse_config(cfg));
        FAIL();
    }
    catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("seed"), std::string::npos) << e.what();
    }
}

TEST(Validate, ReportRoundTripsThroughJson)
{
    json cfg                   = validation_config("unused");
    cfg["monte_carlo_seeds"]   = 10;
    const ValidationReport rep = validate_scaling(parse_config(cfg));
    const json j               = validation_to_json(rep);
    EXPECT_EQ(validation_to_json(validation_from_json(json::parse(j.dump()))), j);
    std::ostringstream csv;
    write_validation_csv(csv, rep);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
              "fraction,idi_small,idi_real,f_empirical_mean,f_predicted,k_fit,time_ratio_empirical,"
              "time_ratio_eq6,time_ratio_eq5,residual");
}

#ifdef SMALLWORLD_CLI
namespace
{

int run_cli(const std::string& args, const fs::path& err)
{
    const std::string cmd = std::string("\"") + SMALLWORLD_CLI + "\" " + args + " > /dev/null 2> \"" + err.string() + "\"";
    const int status      = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Cli, ConfigErrorIsJsonOnStderr)
{
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    json cfg              = base_config(dir / "out");
    cfg["world"]["bogus"] = 1;
    write_text_file(dir / "bad.json", cfg.dump());
    EXPECT_EQ(run_cli("generate --config " + (dir / "bad.json").string(), dir / "err.txt"), 1);
    const json err = json::parse(slurp(dir / "err.txt"));
    EXPECT_EQ(err.at("error"), "config");
    EXPECT_EQ(err.at("field"), "world.bogus");

    EXPECT_EQ(run_cli("frobnicate", dir / "err.txt"), 2);
    EXPECT_EQ(json::parse(slurp(dir / "err.txt")).at("error"), "usage");
    fs::remove_all(dir);
}

TEST(Cli, FlagsOverrideConfig)
{
    const fs::path dir = scratch("cli_ok");
    fs::create_directories(dir);
    write_text_file(dir / "cfg.json", base_config(dir / "ignored").dump());
    EXPECT_EQ(run_cli("generate --config " + (dir / "cfg.json").string() + " --out " + (dir / "a").string() +
                          " --seed 1",
                      dir / "err.txt"),
              0);
    EXPECT_EQ(run_cli("generate --config " + (dir / "cfg.json").string() + " --out " + (dir / "b").string() +
                          " --seed 2",
                      dir / "err.txt"),
              0);
    EXPECT_FALSE(fs::exists(dir / "ignored"));
    EXPECT_NE(slurp(dir / "a" / "trajectories.csv"), slurp(dir / "b" / "trajectories.csv"));
    fs::remove_all(dir);
}
#endif
