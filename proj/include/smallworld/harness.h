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

#ifndef SMALLWORLD_HARNESS_H
#define SMALLWORLD_HARNESS_H

#include "smallworld/io.h"
#include "smallworld/metrics.h"
#include "smallworld/policy.h"
#include "smallworld/scaling.h"
#include "smallworld/seir.h"
#include "smallworld/world.h"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace smallworld
{

/// Invalid configuration; field() is the dotted path of the offending entry.
class ConfigError : public std::invalid_argument
{
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what)
        , m_field(std::move(field))
    {
    }
    const std::string& field() const
    {
        return m_field;
    }

private:
    std::string m_field;
};

struct WorldConfig {
    std::size_t population = 1000;
    GridSpec grid{10, 10, 500.0, {}};
    TimeFrameSpec frames{60, 1440};
    MobilityParams mobility;
    /// Alternative sources; a points file is discretized, a trajectory file is loaded as is.
    std::optional<std::filesystem::path> points_csv;
    std::optional<std::filesystem::path> trajectories_csv;
    std::optional<std::filesystem::path> metadata_json;
};

struct EpidemicConfig {
    SeirParams params{0.0, 1.0, 3.0};
    ContactModel contact;
    /// Initial infectious share; every world seeds round(fraction * M) agents, at least one.
    double initial_infected_fraction = 0.01;
    double time_unit_seconds         = 86400.0;
    bool record_cells                = false;

    std::size_t initial_for(std::size_t population) const;
};

struct ScalingConfig {
    int exponent = 1;
    std::optional<long long> n; ///< defaults to frames per day
    double k_r                = 1.0;
    double k                  = 0.0;
    double threshold_fraction = 0.05;
    /// Frames between real-world reports; defaults to one day.
    std::optional<FrameIndex> report_interval;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    WorldConfig world;
    EpidemicConfig epidemic;
    std::optional<TimeWindow> idi_window;
    std::vector<double> fractions;
    std::vector<PolicySpec> policies;
    ScalingConfig scaling;
    std::size_t monte_carlo_seeds = 10;
    std::filesystem::path output_dir = "out";

    TimeWindow window() const;
    long long frame_multiplier() const;
    FrameIndex report_interval() const;
};

/// Relative file paths are resolved against base_dir. Throws ConfigError.
ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Synthetic, discretized or loaded world according to the config.
WorldModel build_world(const ExperimentConfig& config);

EpidemicSetup epidemic_setup(const EpidemicConfig& config, std::size_t population);

struct ValidationRow {
    double fraction        = 0.0;
    std::size_t population = 0;
    double idi_small       = 0.0;
    double idi_real        = 0.0;
    std::vector<double> mean_infected;             ///< per report frame, E+I+R averaged over seeds
    std::vector<std::optional<double>> empirical_f; ///< Rn_t / Sn_t per report frame
    std::optional<double> f_empirical_mean;
    std::optional<double> f_predicted;
    std::optional<double> k_fit;
    std::optional<double> time_to_threshold_small;
    std::optional<double> time_to_threshold_real;
    std::size_t reached_small = 0;
    std::optional<double> time_ratio_empirical;
    std::optional<double> time_ratio_eq6;
    std::optional<double> time_ratio_eq5;
    std::optional<double> residual;
};

struct ValidationReport {
    std::uint64_t seed    = 0;
    std::size_t seeds     = 0;
    double threshold_fraction = 0.0;
    std::vector<std::size_t> report_frames;
    std::size_t population_real = 0;
    double idi_real             = 0.0;
    std::vector<double> real_mean_infected;
    std::optional<double> time_to_threshold_real;
    std::size_t reached_real = 0;
    std::vector<ValidationRow> rows; ///< sorted by fraction
    std::optional<CalibrationFit> fit;
    std::optional<int> closer_exponent;
    std::optional<double> eq6_log_error;
    std::optional<double> eq5_log_error;
    bool idi_monotone  = false;
    bool time_monotone = false;
    bool f_monotone    = false;
};

/**
 * Empirical test of the scaling laws. The full world is simulated first as the
 * oracle (Rn_t); then for every fraction and seed a fresh uniform sample is
 * simulated (Sn_t) with the same epidemic parameters. Infected counts are
 * cumulative (E + I + R) and compared at every report frame.
 *
 * Time-to-threshold means count seeds that never reach the threshold as one
 * past the last entry; the mean is absent only when no seed reaches it.
 */
ValidationReport validate_scaling(const ExperimentConfig& config);

json validation_to_json(const ValidationReport& report);
ValidationReport validation_from_json(const json& j);
void write_validation_csv(std::ostream& out, const ValidationReport& report);

/// Files written by one stage; removed again if the stage fails.
class OutputSet
{
public:
    explicit OutputSet(std::filesystem::path dir);
    OutputSet(const OutputSet&)            = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet();

    std::filesystem::path write(const std::string& name, const std::string& text);
    /// Streams into the file through writer(std::ostream&).
    std::filesystem::path write_with(const std::string& name, const std::function<void(std::ostream&)>& writer);
    void commit()
    {
        m_committed = true;
    }
    const std::vector<std::filesystem::path>& files() const
    {
        return m_files;
    }
    const std::filesystem::path& dir() const
    {
        return m_dir;
    }

private:
    std::filesystem::path m_dir;
    std::vector<std::filesystem::path> m_files;
    bool m_committed = false;
};

using FileList = std::vector<std::filesystem::path>;

FileList run_generate(const ExperimentConfig& config);
FileList run_sample(const ExperimentConfig& config);
/// Also prints one CSV row per (world, window) to csv_out.
FileList run_idi(const ExperimentConfig& config, std::ostream& csv_out);
FileList run_simulate(const ExperimentConfig& config);
FileList run_scale(const ExperimentConfig& config);
FileList run_compare(const ExperimentConfig& config);
FileList run_validate(const ExperimentConfig& config);

/**
 * Full pipeline: world metadata, IDI reports, one simulated series per world,
 * a scaling report per fraction and a comparison per policy against no policy.
 */
FileList run_pipeline(const ExperimentConfig& config);

} // namespace smallworld

#endif // SMALLWORLD_HARNESS_H
