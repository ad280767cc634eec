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

#include "smallworld/io.h"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <unordered_map>

namespace smallworld
{

std::string format_double(double value)
{
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

namespace
{

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

template <class T>
T parse_number(std::string_view field, std::size_t line, const char* name)
{
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError(line, std::string("invalid ") + name + " '" + std::string(field) + "'");
    }
    return value;
}

/// Reads lines, checks the header and calls row(fields, line_number) for each record.
template <class Row>
void read_csv(std::istream& in, std::string_view header, std::size_t n_fields, Row&& row)
{
    std::string line;
    std::size_t number = 0;
    bool seen_header   = false;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!seen_header) {
            if (line != header) {
                throw ParseError(number, "expected header '" + std::string(header) + "'");
            }
            seen_header = true;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        auto fields = split(line);
        if (fields.size() != n_fields) {
            throw ParseError(number, "expected " + std::to_string(n_fields) + " fields");
        }
        row(fields, number);
    }
    if (!seen_header) {
        throw ParseError(0, "missing header '" + std::string(header) + "'");
    }
}

void check_id(const std::string& id)
{
    if (id.find_first_of(",\n\r") != std::string::npos) {
        throw std::invalid_argument("user id '" + id + "' cannot be written to CSV");
    }
}

} // namespace

std::vector<RawPoint> read_points_csv(std::istream& in)
{
    std::vector<RawPoint> points;
    read_csv(in, "user_id,timestamp_s,x_m,y_m", 4, [&](const auto& f, std::size_t line) {
        points.push_back({std::string(f[0]), parse_number<double>(f[1], line, "timestamp_s"),
                          {parse_number<double>(f[2], line, "x_m"), parse_number<double>(f[3], line, "y_m")}});
    });
    return points;
}

void write_points_csv(std::ostream& out, const std::vector<RawPoint>& points)
{
    out << "user_id,timestamp_s,x_m,y_m\n";
    for (const RawPoint& p : points) {
        check_id(p.user_id);
        out << p.user_id << ',' << format_double(p.timestamp) << ',' << format_double(p.position.x) << ','
            << format_double(p.position.y) << '\n';
    }
}

std::vector<Trajectory> read_trajectories_csv(std::istream& in)
{
    std::unordered_map<std::string, std::size_t> index_of;
    std::vector<std::string> users;
    std::vector<std::vector<Visit>> visits;
    read_csv(in, "user_id,frame,cell_id", 3, [&](const auto& f, std::size_t line) {
        std::string id(f[0]);
        auto [it, inserted] = index_of.try_emplace(id, users.size());
        if (inserted) {
            users.push_back(id);
            visits.emplace_back();
        }
        const Visit v{parse_number<FrameIndex>(f[1], line, "frame"), parse_number<CellId>(f[2], line, "cell_id")};
        auto& seq = visits[it->second];
        if (!seq.empty() && v.frame <= seq.back().frame) {
            throw ParseError(line, "frames of user " + id + " are not strictly increasing");
        }
        seq.push_back(v);
    });
    std::vector<Trajectory> out;
    out.reserve(users.size());
    for (std::size_t u = 0; u < users.size(); ++u) {
        out.push_back(Trajectory::from_visits(users[u], visits[u]));
    }
    return out;
}

void write_trajectories_csv(std::ostream& out, const std::vector<Trajectory>& trajectories)
{
    out << "user_id,frame,cell_id\n";
    for (const Trajectory& t : trajectories) {
        check_id(t.user_id());
        for (const Stay& s : t.stays()) {
            for (FrameIndex f = s.begin; f < s.end; ++f) {
                out << t.user_id() << ',' << f << ',' << s.cell << '\n';
            }
        }
    }
}

void to_json(json& j, const GridSpec& grid)
{
    j = json{{"rows", grid.rows},
             {"cols", grid.cols},
             {"cell_size", grid.cell_size},
             {"origin", json::array({grid.origin.x, grid.origin.y})}};
}

void from_json(const json& j, GridSpec& grid)
{
    grid.rows      = j.at("rows").get<int>();
    grid.cols      = j.at("cols").get<int>();
    grid.cell_size = j.at("cell_size").get<double>();
    if (j.contains("origin")) {
        const json& o = j.at("origin");
        grid.origin   = {o.at(0).get<double>(), o.at(1).get<double>()};
    }
}

json world_metadata_json(const WorldModel& world)
{
    return json{{"grid", world.grid},
                {"frame_duration", world.frames.frame_duration},
                {"horizon", world.frames.horizon},
                {"population", world.population()}};
}

WorldMetadata parse_world_metadata(const json& j)
{
    WorldMetadata meta;
    meta.grid                  = j.at("grid").get<GridSpec>();
    meta.frames.frame_duration = j.at("frame_duration").get<std::int64_t>();
    meta.frames.horizon        = j.at("horizon").get<FrameIndex>();
    meta.population            = j.at("population").get<std::size_t>();
    meta.grid.validate();
    meta.frames.validate();
    return meta;
}

void save_world(const std::filesystem::path& dir, const WorldModel& world)
{
    std::filesystem::create_directories(dir);
    write_text_file(dir / "world.json", world_metadata_json(world).dump(2) + "\n");
    std::ofstream out(dir / "trajectories.csv", std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + (dir / "trajectories.csv").string());
    }
    write_trajectories_csv(out, world.trajectories);
}

WorldModel load_world(const std::filesystem::path& metadata_json, const std::filesystem::path& trajectories_csv)
{
    const WorldMetadata meta = parse_world_metadata(read_json_file(metadata_json));
    std::ifstream in(trajectories_csv, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + trajectories_csv.string());
    }
    WorldModel world{meta.grid, meta.frames, read_trajectories_csv(in)};
    if (world.population() != meta.population) {
        throw ParseError(0, "metadata population " + std::to_string(meta.population) + " does not match " +
                                std::to_string(world.population()) + " trajectories");
    }
    world.validate();
    return world;
}

void write_series_csv(std::ostream& out, const EpidemicSeries& series)
{
    out << "frame,s,e,i,r\n";
    for (std::size_t k = 0; k < series.states.size(); ++k) {
        const CompartmentState& x = series.states[k];
        out << k << ',' << format_double(x.s) << ',' << format_double(x.e) << ',' << format_double(x.i) << ','
            << format_double(x.r) << '\n';
    }
}

EpidemicSeries read_series_csv(std::istream& in)
{
    EpidemicSeries series;
    read_csv(in, "frame,s,e,i,r", 5, [&](const auto& f, std::size_t line) {
        if (parse_number<std::size_t>(f[0], line, "frame") != series.states.size()) {
            throw ParseError(line, "frames must be consecutive from 0");
        }
        series.states.push_back({parse_number<double>(f[1], line, "s"), parse_number<double>(f[2], line, "e"),
                                 parse_number<double>(f[3], line, "i"), parse_number<double>(f[4], line, "r")});
    });
    return series;
}

void write_cells_csv(std::ostream& out, const EpidemicSeries& series)
{
    out << "frame,cell_id,infected\n";
    if (!series.has_cells()) {
        return;
    }
    for (std::size_t k = 0; k < series.states.size(); ++k) {
        for (std::size_t c = 0; c < series.n_cells; ++c) {
            const double v = series.cell(k, c);
            if (v != 0.0) {
                out << k << ',' << c << ',' << format_double(v) << '\n';
            }
        }
    }
}

void read_cells_csv(std::istream& in, EpidemicSeries& series, std::size_t n_cells)
{
    series.n_cells = n_cells;
    series.cell_infected.assign(series.states.size() * n_cells, 0.0);
    read_csv(in, "frame,cell_id,infected", 3, [&](const auto& f, std::size_t line) {
        const auto frame = parse_number<std::size_t>(f[0], line, "frame");
        const auto cell  = parse_number<std::size_t>(f[1], line, "cell_id");
        if (frame >= series.states.size() || cell >= n_cells) {
            throw ParseError(line, "frame or cell out of range");
        }
        series.cell_infected[frame * n_cells + cell] = parse_number<double>(f[2], line, "infected");
    });
}

void to_json(json& j, const TimeWindow& window)
{
    j = json{{"start_frame", window.start_frame}, {"end_frame", window.end_frame}};
}

void from_json(const json& j, TimeWindow& window)
{
    window.start_frame = j.at("start_frame").get<FrameIndex>();
    window.end_frame   = j.at("end_frame").get<FrameIndex>();
}

void to_json(json& j, const IdiReport& r)
{
    j = json{{"idi", r.idi},   {"avg_c", r.avg_c}, {"sum_c", r.sum_c}, {"m", r.m},
             {"n_cell", r.n_cell}, {"rho1", r.rho1}, {"rho2", r.rho2}, {"conn", r.conn},
             {"conn_exact", r.conn_exact}, {"window", r.window}};
}

void from_json(const json& j, IdiReport& r)
{
    r.idi        = j.at("idi").get<double>();
    r.avg_c      = j.at("avg_c").get<double>();
    r.sum_c      = j.at("sum_c").get<std::uint64_t>();
    r.m          = j.at("m").get<std::uint64_t>();
    r.n_cell     = j.at("n_cell").get<std::uint64_t>();
    r.rho1       = j.at("rho1").get<double>();
    r.rho2       = j.at("rho2").get<double>();
    r.conn       = j.at("conn").get<double>();
    r.conn_exact = j.value("conn_exact", 0.0);
    if (j.contains("window")) {
        r.window = j.at("window").get<TimeWindow>();
    }
}

void to_json(json& j, const SeirParams& p)
{
    j = json{{"beta", p.beta}, {"t_e", p.t_e}, {"t_r", p.t_r}};
}

void from_json(const json& j, SeirParams& p)
{
    p.beta = j.at("beta").get<double>();
    p.t_e  = j.at("t_e").get<double>();
    p.t_r  = j.at("t_r").get<double>();
}

void to_json(json& j, const ContactModel& c)
{
    j = json{{"contact_coeff", c.contact_coeff}, {"transmission_prob", c.transmission_prob}};
}

void from_json(const json& j, ContactModel& c)
{
    c.contact_coeff     = j.at("contact_coeff").get<double>();
    c.transmission_prob = j.at("transmission_prob").get<double>();
}

namespace
{

template <class T>
json optional_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> optional_from(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<T>();
}

} // namespace

void to_json(json& j, const ScalingReport& r)
{
    j = json{{"idi_small", r.idi_small},
             {"idi_real", r.idi_real},
             {"r", r.r},
             {"n", r.n},
             {"f", r.f},
             {"f_compound", r.f_compound},
             {"k", r.k},
             {"exponent", r.exponent},
             {"time_ratio", r.time_ratio},
             {"time_to_threshold_small", optional_json(r.time_to_threshold_small)},
             {"predicted_time_real", optional_json(r.predicted_time_real)}};
}

void from_json(const json& j, ScalingReport& r)
{
    r.idi_small               = j.at("idi_small").get<double>();
    r.idi_real                = j.at("idi_real").get<double>();
    r.r                       = j.at("r").get<double>();
    r.n                       = j.at("n").get<long long>();
    r.f                       = j.at("f").get<double>();
    r.f_compound              = j.value("f_compound", r.f);
    r.k                       = j.at("k").get<double>();
    r.exponent                = j.at("exponent").get<int>();
    r.time_ratio              = j.at("time_ratio").get<double>();
    r.time_to_threshold_small = optional_from<std::size_t>(j, "time_to_threshold_small");
    r.predicted_time_real     = optional_from<double>(j, "predicted_time_real");
}

void to_json(json& j, const CalibrationFit& fit)
{
    json pts = json::array();
    for (const auto& [idi, f] : fit.points) {
        pts.push_back(json::array({idi, f}));
    }
    j = json{{"k", fit.k}, {"intercept", fit.intercept}, {"residual", fit.residual}, {"points", pts}};
}

void from_json(const json& j, CalibrationFit& fit)
{
    fit.k         = j.at("k").get<double>();
    fit.intercept = j.at("intercept").get<double>();
    fit.residual  = j.at("residual").get<double>();
    fit.points.clear();
    for (const json& p : j.at("points")) {
        fit.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
}

json policy_to_json(const PolicySpec& policy)
{
    json j{{"type", policy_type(policy)}};
    if (const auto* c = std::get_if<Curfew>(&policy)) {
        j["restricted_frames"] = c->restricted_frames;
    }
    else if (const auto* l = std::get_if<Lockdown>(&policy)) {
        j["closed_cells"] = l->closed_cells;
    }
    else if (const auto* s = std::get_if<StayHome>(&policy)) {
        j["fraction"] = s->fraction;
        j["seed"]     = s->seed;
    }
    else if (const auto* m = std::get_if<MobilityCap>(&policy)) {
        j["max_distinct_cells_per_day"] = m->max_distinct_cells_per_day;
    }
    return j;
}

PolicySpec policy_from_json(const json& j)
{
    const std::string type = j.at("type").get<std::string>();
    if (type == "none") {
        return NoPolicy{};
    }
    if (type == "curfew") {
        return Curfew{j.at("restricted_frames").get<std::vector<FrameIndex>>()};
    }
    if (type == "lockdown") {
        return Lockdown{j.at("closed_cells").get<std::vector<CellId>>()};
    }
    if (type == "stay_home") {
        return StayHome{j.at("fraction").get<double>(), j.value("seed", std::uint64_t{0})};
    }
    if (type == "mobility_cap") {
        return MobilityCap{j.at("max_distinct_cells_per_day").get<std::uint32_t>()};
    }
    throw std::invalid_argument("unknown policy type '" + type + "'");
}

json comparison_to_json(const PolicyComparison& cmp)
{
    return json{{"policy_a", policy_to_json(cmp.a)},
                {"policy_b", policy_to_json(cmp.b)},
                {"idi_a", cmp.idi_a},
                {"idi_b", cmp.idi_b},
                {"exponent", cmp.exponent},
                {"time_ratio", cmp.time_ratio},
                {"factor_ratio", cmp.factor_ratio},
                {"k", cmp.k},
                {"seeds", cmp.seeds},
                {"attack_rate_a", cmp.attack_rate_a},
                {"attack_rate_b", cmp.attack_rate_b},
                {"attack_rate_difference", cmp.attack_rate_difference}};
}

json run_report_json(const AgentRun& run, const SeirParams& params, const ContactModel& contact)
{
    return json{{"seed", run.seed},
                {"params", params},
                {"contact", contact},
                {"frame_dt", run.series.dt},
                {"initial_infected", run.initial_agents.size()},
                {"evaluated_cell_frames", run.evaluated_cell_frames},
                {"clamped_cell_frames", run.clamped_cell_frames},
                {"clamp_ratio", run.clamp_ratio},
                {"clamp_warning", run.clamp_warning},
                {"attack_rate", attack_rate(run.series)}};
}

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    try {
        return json::parse(in);
    }
    catch (const json::parse_error& e) {
        throw ParseError(0, path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

} // namespace smallworld
