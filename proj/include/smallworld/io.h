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

#ifndef SMALLWORLD_IO_H
#define SMALLWORLD_IO_H

#include "smallworld/metrics.h"
#include "smallworld/policy.h"
#include "smallworld/scaling.h"
#include "smallworld/seir.h"
#include "smallworld/world.h"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace smallworld
{

using nlohmann::json;

/// Malformed input file; line is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error
{
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what)
        , m_line(line)
    {
    }
    std::size_t line() const
    {
        return m_line;
    }

private:
    std::size_t m_line;
};

/// Shortest decimal form that reads back to the same double.
std::string format_double(double value);

// user_id,timestamp_s,x_m,y_m
std::vector<RawPoint> read_points_csv(std::istream& in);
void write_points_csv(std::ostream& out, const std::vector<RawPoint>& points);

// user_id,frame,cell_id
std::vector<Trajectory> read_trajectories_csv(std::istream& in);
void write_trajectories_csv(std::ostream& out, const std::vector<Trajectory>& trajectories);

struct WorldMetadata {
    GridSpec grid;
    TimeFrameSpec frames;
    std::size_t population = 0;
};

json world_metadata_json(const WorldModel& world);
WorldMetadata parse_world_metadata(const json& j);

/// Writes <dir>/world.json and <dir>/trajectories.csv.
void save_world(const std::filesystem::path& dir, const WorldModel& world);
WorldModel load_world(const std::filesystem::path& metadata_json, const std::filesystem::path& trajectories_csv);

// frame,s,e,i,r
void write_series_csv(std::ostream& out, const EpidemicSeries& series);
EpidemicSeries read_series_csv(std::istream& in);

// frame,cell_id,infected; only non-zero entries are written
void write_cells_csv(std::ostream& out, const EpidemicSeries& series);
/// Fills series.cell_infected for an already loaded series with n_cells cells.
void read_cells_csv(std::istream& in, EpidemicSeries& series, std::size_t n_cells);

void to_json(json& j, const GridSpec& grid);
void from_json(const json& j, GridSpec& grid);
void to_json(json& j, const TimeWindow& window);
void from_json(const json& j, TimeWindow& window);
void to_json(json& j, const IdiReport& report);
void from_json(const json& j, IdiReport& report);
void to_json(json& j, const SeirParams& params);
void from_json(const json& j, SeirParams& params);
void to_json(json& j, const ContactModel& contact);
void from_json(const json& j, ContactModel& contact);
void to_json(json& j, const ScalingReport& report);
void from_json(const json& j, ScalingReport& report);
void to_json(json& j, const CalibrationFit& fit);
void from_json(const json& j, CalibrationFit& fit);

/// Policies are objects with a "type" discriminator.
json policy_to_json(const PolicySpec& policy);
PolicySpec policy_from_json(const json& j);

/// Summary fields of a comparison; the mean series are written as CSV files.
json comparison_to_json(const PolicyComparison& cmp);

json run_report_json(const AgentRun& run, const SeirParams& params, const ContactModel& contact);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace smallworld

#endif // SMALLWORLD_IO_H
