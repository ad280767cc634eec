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
#include "smallworld/random.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace smallworld
{

namespace
{

/// Strict reader over one JSON object: typed access with dotted field names, unknown keys rejected.
class Section
{
public:
    Section(const json& j, std::string path)
        : m_json(j)
        , m_path(std::move(path))
    {
        if (!j.is_object()) {
            throw ConfigError(m_path.empty() ? "<root>" : m_path, "expected an object");
        }
    }

    std::string field(std::string_view key) const
    {
        return m_path.empty() ? std::string(key) : m_path + "." + std::string(key);
    }

    bool has(const char* key)
    {
        m_seen.insert(key);
        return m_json.contains(key) && !m_json.at(key).is_null();
    }

    template <class T>
    T get(const char* key, T fallback)
    {
        return has(key) ? convert<T>(m_json.at(key), field(key)) : fallback;
    }

    template <class T>
    std::optional<T> maybe(const char* key)
    {
        if (!has(key)) {
            return std::nullopt;
        }
        return convert<T>(m_json.at(key), field(key));
    }

    const json& raw(const char* key)
    {
        m_seen.insert(key);
        return m_json.at(key);
    }

    void finish() const
    {
        for (auto it = m_json.begin(); it != m_json.end(); ++it) {
            if (!m_seen.count(it.key())) {
                throw ConfigError(field(it.key()), "unknown field");
            }
        }
    }

    template <class T>
    static T convert(const json& v, const std::string& name)
    {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                throw ConfigError(name, "expected a boolean");
            }
        }
        else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
            if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
                throw ConfigError(name, "expected a non-negative integer");
            }
        }
        else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                throw ConfigError(name, "expected an integer");
            }
        }
        else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) {
                throw ConfigError(name, "expected a number");
            }
        }
        else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) {
                throw ConfigError(name, "expected a string");
            }
        }
        try {
            return v.get<T>();
        }
        catch (const json::exception& e) {
            throw ConfigError(name, e.what());
        }
    }

private:
    const json& m_json;
    std::string m_path;
    std::set<std::string> m_seen;
};

template <class F>
void checked(const std::string& field, F&& check)
{
    try {
        check();
    }
    catch (const ConfigError&) {
        throw;
    }
    catch (const std::invalid_argument& e) {
        throw ConfigError(field, e.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

PolicySpec parse_policy(const json& j, const std::string& name, const TimeFrameSpec& frames, const GridSpec& grid)
{
    Section s(j, name);
    const std::string type = s.get<std::string>("type", "");
    PolicySpec policy;
    if (type == "none") {
        policy = NoPolicy{};
    }
    else if (type == "curfew") {
        Curfew curfew;
        if (s.has("restricted_frames")) {
            curfew.restricted_frames =
                Section::convert<std::vector<FrameIndex>>(s.raw("restricted_frames"), s.field("restricted_frames"));
        }
        else {
            const double from = s.get<double>("from_hour", 22.0);
            const double to   = s.get<double>("to_hour", 6.0);
            if (from < 0 || from > 24 || to < 0 || to > 24) {
                throw ConfigError(s.field("from_hour"), "hours must lie in [0, 24]");
            }
            const FrameIndex per_day = frames.frames_per_day();
            const auto fph           = 3600.0 / static_cast<double>(frames.frame_duration);
            const auto first         = static_cast<FrameIndex>(std::llround(from * fph)) % per_day;
            const auto last          = static_cast<FrameIndex>(std::llround(to * fph)) % per_day;
            for (FrameIndex f = first; f != last; f = (f + 1) % per_day) {
                curfew.restricted_frames.push_back(f);
            }
        }
        policy = curfew;
    }
    else if (type == "lockdown") {
        policy = Lockdown{Section::convert<std::vector<CellId>>(s.raw("closed_cells"), s.field("closed_cells"))};
    }
    else if (type == "stay_home") {
        policy = StayHome{s.get<double>("fraction", 0.0), s.get<std::uint64_t>("seed", 0)};
    }
    else if (type == "mobility_cap") {
        policy = MobilityCap{s.get<std::uint32_t>("max_distinct_cells_per_day", 1)};
    }
    else {
        throw ConfigError(s.field("type"), "unknown policy type '" + type + "'");
    }
    s.finish();
    checked(name, [&] {
        validate_policy(policy, WorldModel{grid, frames, {}});
    });
    return policy;
}

} // namespace

std::size_t EpidemicConfig::initial_for(std::size_t population) const
{
    if (!(initial_infected_fraction > 0.0)) {
        return 0;
    }
    const auto n = static_cast<std::size_t>(std::llround(initial_infected_fraction * static_cast<double>(population)));
    return std::clamp<std::size_t>(n, 1, population);
}

TimeWindow ExperimentConfig::window() const
{
    return idi_window.value_or(TimeWindow::whole(world.frames));
}

long long ExperimentConfig::frame_multiplier() const
{
    return scaling.n.value_or(static_cast<long long>(world.frames.frames_per_day()));
}

FrameIndex ExperimentConfig::report_interval() const
{
    return scaling.report_interval.value_or(world.frames.frames_per_day());
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir)
{
    ExperimentConfig config;
    Section root(j, "");
    config.seed = root.get<std::uint64_t>("seed", 0);

    if (root.has("world")) {
        Section w(root.raw("world"), "world");
        WorldConfig& wc = config.world;
        wc.population   = w.get<std::size_t>("population", wc.population);
        if (w.has("grid")) {
            Section g(w.raw("grid"), "world.grid");
            wc.grid.rows      = g.get<int>("rows", wc.grid.rows);
            wc.grid.cols      = g.get<int>("cols", wc.grid.cols);
            wc.grid.cell_size = g.get<double>("cell_size", wc.grid.cell_size);
            if (auto origin = g.maybe<std::vector<double>>("origin")) {
                if (origin->size() != 2) {
                    throw ConfigError("world.grid.origin", "expected [x, y]");
                }
                wc.grid.origin = {(*origin)[0], (*origin)[1]};
            }
            g.finish();
        }
        if (w.has("frames")) {
            Section f(w.raw("frames"), "world.frames");
            wc.frames.frame_duration = f.get<std::int64_t>("frame_duration", wc.frames.frame_duration);
            wc.frames.horizon        = f.get<FrameIndex>("horizon", wc.frames.horizon);
            f.finish();
        }
        if (w.has("mobility")) {
            Section m(w.raw("mobility"), "world.mobility");
            MobilityParams& mp = wc.mobility;
            mp.home_anchors    = m.get<int>("home_anchors", mp.home_anchors);
            mp.work_anchors    = m.get<int>("work_anchors", mp.work_anchors);
            mp.excursion_rate  = m.get<double>("excursion_rate", mp.excursion_rate);
            mp.mean_trip_cells = m.get<double>("mean_trip_cells", mp.mean_trip_cells);
            mp.work_start_hour = m.get<double>("work_start_hour", mp.work_start_hour);
            mp.work_hours      = m.get<double>("work_hours", mp.work_hours);
            mp.jitter_hours    = m.get<double>("jitter_hours", mp.jitter_hours);
            m.finish();
        }
        if (auto p = w.maybe<std::string>("points_csv")) {
            wc.points_csv = resolve(base_dir, *p);
        }
        if (auto p = w.maybe<std::string>("trajectories_csv")) {
            wc.trajectories_csv = resolve(base_dir, *p);
        }
        if (auto p = w.maybe<std::string>("metadata_json")) {
            wc.metadata_json = resolve(base_dir, *p);
        }
        w.finish();
    }
    checked("world.grid", [&] {
        config.world.grid.validate();
    });
    checked("world.frames", [&] {
        config.world.frames.validate();
    });
    checked("world.mobility", [&] {
        config.world.mobility.validate(config.world.grid);
    });
    if (config.world.population == 0) {
        throw ConfigError("world.population", "must be at least 1");
    }
    if (config.world.trajectories_csv.has_value() != config.world.metadata_json.has_value()) {
        throw ConfigError("world.trajectories_csv", "trajectories_csv and metadata_json must be given together");
    }

    if (root.has("epidemic")) {
        Section e(root.raw("epidemic"), "epidemic");
        EpidemicConfig& ec                  = config.epidemic;
        ec.params.beta                      = e.get<double>("beta", ec.params.beta);
        ec.params.t_e                       = e.get<double>("t_e", ec.params.t_e);
        ec.params.t_r                       = e.get<double>("t_r", ec.params.t_r);
        ec.contact.contact_coeff            = e.get<double>("contact_coeff", ec.contact.contact_coeff);
        ec.contact.transmission_prob        = e.get<double>("transmission_prob", ec.contact.transmission_prob);
        ec.initial_infected_fraction        = e.get<double>("initial_infected_fraction", ec.initial_infected_fraction);
        ec.time_unit_seconds                = e.get<double>("time_unit_seconds", ec.time_unit_seconds);
        ec.record_cells                     = e.get<bool>("record_cells", ec.record_cells);
        e.finish();
    }
    checked("epidemic", [&] {
        config.epidemic.params.validate();
        config.epidemic.contact.validate();
    });
    if (!(config.epidemic.initial_infected_fraction >= 0.0) || config.epidemic.initial_infected_fraction > 1.0) {
        throw ConfigError("epidemic.initial_infected_fraction", "must lie in [0, 1]");
    }
    if (!(config.epidemic.time_unit_seconds > 0.0)) {
        throw ConfigError("epidemic.time_unit_seconds", "must be positive");
    }

    if (root.has("idi_window")) {
        Section iw(root.raw("idi_window"), "idi_window");
        TimeWindow window{iw.get<FrameIndex>("start_frame", 0), iw.get<FrameIndex>("end_frame", config.world.frames.horizon)};
        iw.finish();
        checked("idi_window", [&] {
            window.validate(config.world.frames);
        });
        config.idi_window = window;
    }

    if (root.has("fractions")) {
        const json& fr = root.raw("fractions");
        if (!fr.is_array()) {
            throw ConfigError("fractions", "expected an array");
        }
        for (std::size_t k = 0; k < fr.size(); ++k) {
            const std::string name = "fractions[" + std::to_string(k) + "]";
            const auto f           = Section::convert<double>(fr[k], name);
            if (!(f > 0.0) || f > 1.0) {
                throw ConfigError(name, "must lie in (0, 1]");
            }
            config.fractions.push_back(f);
        }
    }

    if (root.has("policies")) {
        const json& pl = root.raw("policies");
        if (!pl.is_array()) {
            throw ConfigError("policies", "expected an array");
        }
        for (std::size_t k = 0; k < pl.size(); ++k) {
            config.policies.push_back(parse_policy(pl[k], "policies[" + std::to_string(k) + "]", config.world.frames,
                                                   config.world.grid));
        }
    }

    if (root.has("scaling")) {
        Section s(root.raw("scaling"), "scaling");
        ScalingConfig& sc        = config.scaling;
        sc.exponent              = s.get<int>("exponent", sc.exponent);
        sc.n                     = s.maybe<long long>("n");
        sc.k_r                   = s.get<double>("k_r", sc.k_r);
        sc.k                     = s.get<double>("k", sc.k);
        sc.threshold_fraction    = s.get<double>("threshold_fraction", sc.threshold_fraction);
        sc.report_interval       = s.maybe<FrameIndex>("report_interval");
        s.finish();
        if (sc.exponent != 1 && sc.exponent != 3) {
            throw ConfigError("scaling.exponent", "must be 1 or 3");
        }
        if (sc.n && *sc.n < 1) {
            throw ConfigError("scaling.n", "must be at least 1");
        }
        if (!(sc.k_r >= 0.0)) {
            throw ConfigError("scaling.k_r", "must be non-negative");
        }
        if (!(sc.threshold_fraction > 0.0) || sc.threshold_fraction > 1.0) {
            throw ConfigError("scaling.threshold_fraction", "must lie in (0, 1]");
        }
        if (sc.report_interval && *sc.report_interval < 1) {
            throw ConfigError("scaling.report_interval", "must be at least 1");
        }
    }

    config.monte_carlo_seeds = root.get<std::size_t>("monte_carlo_seeds", config.monte_carlo_seeds);
    if (config.monte_carlo_seeds < 1) {
        throw ConfigError("monte_carlo_seeds", "must be at least 1");
    }
    if (auto out = root.maybe<std::string>("output_dir")) {
        config.output_dir = resolve(base_dir, *out);
    }
    root.finish();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    json j;
    try {
        j = read_json_file(path);
    }
    catch (const std::exception& e) {
        throw ConfigError("<file>", e.what());
    }
    return parse_config(j, path.parent_path());
}

WorldModel build_world(const ExperimentConfig& config)
{
    const WorldConfig& wc = config.world;
    if (wc.trajectories_csv) {
        return load_world(*wc.metadata_json, *wc.trajectories_csv);
    }
    if (wc.points_csv) {
        std::ifstream in(*wc.points_csv, std::ios::binary);
        if (!in) {
            throw std::runtime_error("cannot read " + wc.points_csv->string());
        }
        const std::vector<RawPoint> points = read_points_csv(in);
        return WorldModel{wc.grid, wc.frames, discretize(points, wc.grid, wc.frames)};
    }
    return generate_synthetic_world(wc.population, wc.grid, wc.frames, wc.mobility,
                                    derive_seed(config.seed, "world"));
}

EpidemicSetup epidemic_setup(const EpidemicConfig& config, std::size_t population)
{
    EpidemicSetup setup;
    setup.params                    = config.params;
    setup.contact                   = config.contact;
    setup.initial                   = config.initial_for(population);
    setup.options.time_unit_seconds = config.time_unit_seconds;
    setup.options.record_cells      = config.record_cells;
    return setup;
}

namespace
{

std::vector<std::size_t> report_frames(const ExperimentConfig& config)
{
    std::vector<std::size_t> frames;
    const std::size_t interval = config.report_interval();
    for (std::size_t k = 0; k <= config.world.frames.horizon; k += interval) {
        frames.push_back(k);
    }
    return frames;
}

/// Mean cumulative infections at report frames and threshold crossing statistics over several runs.
struct RunSummary {
    std::vector<double> infected;
    double threshold_sum = 0.0;
    std::size_t reached  = 0;
    std::size_t runs     = 0;
    double idi_sum       = 0.0;

    void add(const EpidemicSeries& series, const std::vector<std::size_t>& frames, double threshold)
    {
        if (infected.empty()) {
            infected.assign(frames.size(), 0.0);
        }
        for (std::size_t d = 0; d < frames.size(); ++d) {
            infected[d] += series.states[frames[d]].ever_infected();
        }
        if (auto t = measure_time_to_threshold(series, threshold)) {
            threshold_sum += static_cast<double>(*t);
            ++reached;
        }
        else {
            threshold_sum += static_cast<double>(series.states.size());
        }
        ++runs;
    }

    std::vector<double> mean_infected() const
    {
        std::vector<double> out = infected;
        for (double& v : out) {
            v /= static_cast<double>(runs);
        }
        return out;
    }

    std::optional<double> mean_threshold() const
    {
        if (reached == 0) {
            return std::nullopt;
        }
        return threshold_sum / static_cast<double>(runs);
    }
};

EpidemicSeries run_or_report(const WorldModel& world, const EpidemicSetup& setup, std::uint64_t seed,
                             const std::string& what)
{
    try {
        return simulate_agents(world, setup.params, setup.contact, setup.initial, seed, setup.options).series;
    }
    catch (const std::exception& e) {
        throw std::runtime_error("simulation failed for " + what + ": " + e.what());
    }
}

std::string fraction_label(double fraction)
{
    return "fraction " + format_double(fraction);
}

} // namespace

ValidationReport validate_scaling(const ExperimentConfig& config)
{
    if (config.fractions.size() < 2) {
        throw ConfigError("fractions", "validation needs at least two sampling fractions");
    }
    if (config.monte_carlo_seeds < 10) {
        throw ConfigError("monte_carlo_seeds", "validation needs at least 10 seeds");
    }
    const WorldModel world  = build_world(config);
    const TimeWindow window = config.window();
    const double threshold  = config.scaling.threshold_fraction;

    ValidationReport report;
    report.seed               = config.seed;
    report.seeds              = config.monte_carlo_seeds;
    report.threshold_fraction = threshold;
    report.report_frames      = report_frames(config);
    report.population_real    = world.population();
    report.idi_real           = compute_idi(world, window).idi;

    EpidemicSetup setup        = epidemic_setup(config.epidemic, world.population());
    setup.options.record_cells = false;

    RunSummary real;
    for (std::size_t s = 0; s < config.monte_carlo_seeds; ++s) {
        const auto series = run_or_report(world, setup, derive_seed(config.seed, "oracle", s),
                                          "full world, seed " + std::to_string(s));
        real.add(series, report.report_frames, threshold);
    }
    report.real_mean_infected     = real.mean_infected();
    report.time_to_threshold_real = real.mean_threshold();
    report.reached_real           = real.reached;

    std::vector<double> fractions = config.fractions;
    std::sort(fractions.begin(), fractions.end());
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        ValidationRow row;
        row.fraction = fractions[i];
        row.idi_real = report.idi_real;
        RunSummary small;
        const std::uint64_t sample_root = derive_seed(config.seed, "validate_sample", i);
        const std::uint64_t sim_root    = derive_seed(config.seed, "validate_sim", i);
        for (std::size_t s = 0; s < config.monte_carlo_seeds; ++s) {
            const WorldModel sub = sample_small_world(world, row.fraction, derive_seed(sample_root, "seed", s));
            row.population       = sub.population();
            small.idi_sum += compute_idi(sub, window).idi;
            EpidemicSetup sub_setup        = epidemic_setup(config.epidemic, sub.population());
            sub_setup.options.record_cells = false;
            const auto series = run_or_report(sub, sub_setup, derive_seed(sim_root, "seed", s),
                                              fraction_label(row.fraction) + ", seed " + std::to_string(s));
            small.add(series, report.report_frames, threshold);
        }
        row.idi_small               = small.idi_sum / static_cast<double>(config.monte_carlo_seeds);
        row.mean_infected           = small.mean_infected();
        row.time_to_threshold_small = small.mean_threshold();
        row.time_to_threshold_real  = report.time_to_threshold_real;
        row.reached_small           = small.reached;

        double f_sum        = 0.0;
        std::size_t f_count = 0;
        for (std::size_t d = 0; d < report.report_frames.size(); ++d) {
            const double rn = report.real_mean_infected[d];
            const double sn = row.mean_infected[d];
            if (sn > 0.0 && rn > 0.0) {
                row.empirical_f.push_back(rn / sn);
                if (d > 0 || report.report_frames.size() == 1) {
                    f_sum += rn / sn;
                    ++f_count;
                }
            }
            else {
                row.empirical_f.push_back(std::nullopt);
            }
        }
        if (f_count > 0) {
            row.f_empirical_mean = f_sum / static_cast<double>(f_count);
        }
        if (row.idi_small > 0.0 && report.idi_real > 0.0) {
            row.time_ratio_eq6 = time_scaling_ratio(report.idi_real, row.idi_small, 1).ratio;
            row.time_ratio_eq5 = time_scaling_ratio(report.idi_real, row.idi_small, 3).ratio;
        }
        if (row.time_to_threshold_small && report.time_to_threshold_real && *report.time_to_threshold_real > 0.0) {
            row.time_ratio_empirical = *row.time_to_threshold_small / *report.time_to_threshold_real;
        }
        report.rows.push_back(std::move(row));
    }

    std::vector<std::pair<double, double>> points;
    for (const ValidationRow& row : report.rows) {
        if (row.f_empirical_mean) {
            points.emplace_back(row.idi_small, *row.f_empirical_mean);
        }
    }
    try {
        report.fit = calibrate_k(points);
    }
    catch (const std::invalid_argument&) {
        report.fit.reset();
    }
    if (report.fit) {
        for (ValidationRow& row : report.rows) {
            row.k_fit       = report.fit->k;
            row.f_predicted = std::exp(report.fit->k * row.idi_small + report.fit->intercept);
            if (row.f_empirical_mean) {
                row.residual = std::log(*row.f_empirical_mean) - std::log(*row.f_predicted);
            }
        }
    }

    double err6      = 0.0;
    double err5      = 0.0;
    std::size_t used = 0;
    for (const ValidationRow& row : report.rows) {
        if (row.time_ratio_empirical && row.time_ratio_eq6 && *row.time_ratio_empirical > 0.0) {
            err6 += std::abs(std::log(*row.time_ratio_empirical) - std::log(*row.time_ratio_eq6));
            err5 += std::abs(std::log(*row.time_ratio_empirical) - std::log(*row.time_ratio_eq5));
            ++used;
        }
    }
    if (used > 0) {
        report.eq6_log_error   = err6 / static_cast<double>(used);
        report.eq5_log_error   = err5 / static_cast<double>(used);
        report.closer_exponent = err6 <= err5 ? 1 : 3;
    }

    report.idi_monotone  = true;
    report.time_monotone = true;
    report.f_monotone    = true;
    for (std::size_t i = 0; i + 1 < report.rows.size(); ++i) {
        const ValidationRow& lo = report.rows[i];
        const ValidationRow& hi = report.rows[i + 1];
        if (!(lo.idi_small < hi.idi_small)) {
            report.idi_monotone = false;
        }
        if (!lo.time_to_threshold_small || !hi.time_to_threshold_small ||
            !(*lo.time_to_threshold_small > *hi.time_to_threshold_small)) {
            report.time_monotone = false;
        }
        std::size_t compared = 0;
        for (std::size_t d = 0; d < report.report_frames.size(); ++d) {
            if (lo.empirical_f[d] && hi.empirical_f[d]) {
                ++compared;
                if (!(*lo.empirical_f[d] > *hi.empirical_f[d])) {
                    report.f_monotone = false;
                }
            }
        }
        if (compared == 0) {
            report.f_monotone = false;
        }
    }
    return report;
}

namespace
{

template <class T>
json opt(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> opt_from(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<T>();
}

} // namespace

json validation_to_json(const ValidationReport& report)
{
    json rows = json::array();
    for (const ValidationRow& row : report.rows) {
        json f = json::array();
        for (const auto& v : row.empirical_f) {
            f.push_back(opt(v));
        }
        rows.push_back(json{{"fraction", row.fraction},
                            {"population", row.population},
                            {"idi_small", row.idi_small},
                            {"idi_real", row.idi_real},
                            {"mean_infected", row.mean_infected},
                            {"empirical_f", f},
                            {"f_empirical_mean", opt(row.f_empirical_mean)},
                            {"f_predicted", opt(row.f_predicted)},
                            {"k_fit", opt(row.k_fit)},
                            {"time_to_threshold_small", opt(row.time_to_threshold_small)},
                            {"time_to_threshold_real", opt(row.time_to_threshold_real)},
                            {"reached_small", row.reached_small},
                            {"time_ratio_empirical", opt(row.time_ratio_empirical)},
                            {"time_ratio_eq6", opt(row.time_ratio_eq6)},
                            {"time_ratio_eq5", opt(row.time_ratio_eq5)},
                            {"residual", opt(row.residual)}});
    }
    return json{{"seed", report.seed},
                {"seeds", report.seeds},
                {"threshold_fraction", report.threshold_fraction},
                {"report_frames", report.report_frames},
                {"population_real", report.population_real},
                {"idi_real", report.idi_real},
                {"real_mean_infected", report.real_mean_infected},
                {"time_to_threshold_real", opt(report.time_to_threshold_real)},
                {"reached_real", report.reached_real},
                {"rows", rows},
                {"fit", report.fit ? json(*report.fit) : json(nullptr)},
                {"closer_exponent", opt(report.closer_exponent)},
                {"eq6_log_error", opt(report.eq6_log_error)},
                {"eq5_log_error", opt(report.eq5_log_error)},
                {"idi_monotone", report.idi_monotone},
                {"time_monotone", report.time_monotone},
                {"f_monotone", report.f_monotone}};
}

ValidationReport validation_from_json(const json& j)
{
    ValidationReport report;
    report.seed                   = j.at("seed").get<std::uint64_t>();
    report.seeds                  = j.at("seeds").get<std::size_t>();
    report.threshold_fraction     = j.at("threshold_fraction").get<double>();
    report.report_frames          = j.at("report_frames").get<std::vector<std::size_t>>();
    report.population_real        = j.at("population_real").get<std::size_t>();
    report.idi_real               = j.at("idi_real").get<double>();
    report.real_mean_infected     = j.at("real_mean_infected").get<std::vector<double>>();
    report.time_to_threshold_real = opt_from<double>(j, "time_to_threshold_real");
    report.reached_real           = j.at("reached_real").get<std::size_t>();
    for (const json& r : j.at("rows")) {
        ValidationRow row;
        row.fraction      = r.at("fraction").get<double>();
        row.population    = r.at("population").get<std::size_t>();
        row.idi_small     = r.at("idi_small").get<double>();
        row.idi_real      = r.at("idi_real").get<double>();
        row.mean_infected = r.at("mean_infected").get<std::vector<double>>();
        for (const json& f : r.at("empirical_f")) {
            row.empirical_f.push_back(f.is_null() ? std::nullopt : std::optional<double>(f.get<double>()));
        }
        row.f_empirical_mean        = opt_from<double>(r, "f_empirical_mean");
        row.f_predicted             = opt_from<double>(r, "f_predicted");
        row.k_fit                   = opt_from<double>(r, "k_fit");
        row.time_to_threshold_small = opt_from<double>(r, "time_to_threshold_small");
        row.time_to_threshold_real  = opt_from<double>(r, "time_to_threshold_real");
        row.reached_small           = r.at("reached_small").get<std::size_t>();
        row.time_ratio_empirical    = opt_from<double>(r, "time_ratio_empirical");
        row.time_ratio_eq6          = opt_from<double>(r, "time_ratio_eq6");
        row.time_ratio_eq5          = opt_from<double>(r, "time_ratio_eq5");
        row.residual                = opt_from<double>(r, "residual");
        report.rows.push_back(std::move(row));
    }
    if (!j.at("fit").is_null()) {
        report.fit = j.at("fit").get<CalibrationFit>();
    }
    report.closer_exponent = opt_from<int>(j, "closer_exponent");
    report.eq6_log_error   = opt_from<double>(j, "eq6_log_error");
    report.eq5_log_error   = opt_from<double>(j, "eq5_log_error");
    report.idi_monotone    = j.at("idi_monotone").get<bool>();
    report.time_monotone   = j.at("time_monotone").get<bool>();
    report.f_monotone      = j.at("f_monotone").get<bool>();
    return report;
}

void write_validation_csv(std::ostream& out, const ValidationReport& report)
{
    auto cell = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    out << "fraction,idi_small,idi_real,f_empirical_mean,f_predicted,k_fit,time_ratio_empirical,time_ratio_eq6,"
           "time_ratio_eq5,residual\n";
    for (const ValidationRow& row : report.rows) {
        out << format_double(row.fraction) << ',' << format_double(row.idi_small) << ','
            << format_double(row.idi_real) << ',' << cell(row.f_empirical_mean) << ',' << cell(row.f_predicted) << ','
            << cell(row.k_fit) << ',' << cell(row.time_ratio_empirical) << ',' << cell(row.time_ratio_eq6) << ','
            << cell(row.time_ratio_eq5) << ',' << cell(row.residual) << '\n';
    }
}

OutputSet::OutputSet(std::filesystem::path dir)
    : m_dir(std::move(dir))
{
}

OutputSet::~OutputSet()
{
    if (m_committed) {
        return;
    }
    std::error_code ec;
    for (const auto& f : m_files) {
        std::filesystem::remove(f, ec);
    }
}

std::filesystem::path OutputSet::write(const std::string& name, const std::string& text)
{
    const std::filesystem::path path = m_dir / name;
    m_files.push_back(path);
    write_text_file(path, text);
    return path;
}

std::filesystem::path OutputSet::write_with(const std::string& name,
                                            const std::function<void(std::ostream&)>& writer)
{
    const std::filesystem::path path = m_dir / name;
    m_files.push_back(path);
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("cannot write " + path.string());
    }
    writer(os);
    if (!os) {
        throw std::runtime_error("failed writing " + path.string());
    }
    return path;
}

namespace
{

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

template <class Writer>
std::string to_text(Writer&& writer)
{
    std::ostringstream out;
    writer(out);
    return out.str();
}

void stage_world(OutputSet& out, const std::string& prefix, const WorldModel& world, bool with_trajectories)
{
    out.write(prefix + "world.json", dump(world_metadata_json(world)));
    if (with_trajectories) {
        out.write_with(prefix + "trajectories.csv", [&](std::ostream& os) {
            write_trajectories_csv(os, world.trajectories);
        });
    }
}

void stage_simulation(OutputSet& out, const std::string& suffix, const WorldModel& world,
                      const ExperimentConfig& config, std::uint64_t seed, const std::string& what)
{
    const EpidemicSetup setup = epidemic_setup(config.epidemic, world.population());
    AgentRun run;
    try {
        run = simulate_agents(world, setup.params, setup.contact, setup.initial, seed, setup.options);
    }
    catch (const std::exception& e) {
        throw std::runtime_error("simulation failed for " + what + ": " + e.what());
    }
    out.write("series" + suffix + ".csv", to_text([&](std::ostream& os) {
                  write_series_csv(os, run.series);
              }));
    if (run.series.has_cells()) {
        out.write("cells" + suffix + ".csv", to_text([&](std::ostream& os) {
                      write_cells_csv(os, run.series);
                  }));
    }
    out.write("run_report" + suffix + ".json", dump(run_report_json(run, setup.params, setup.contact)));
}

void stage_scaling(OutputSet& out, const ExperimentConfig& config, const WorldModel& world, double idi_real,
                   bool with_idi)
{
    const TimeWindow window = config.window();
    for (std::size_t i = 0; i < config.fractions.size(); ++i) {
        const std::string tag = "_" + std::to_string(i);
        const WorldModel small =
            sample_small_world(world, config.fractions[i], derive_seed(config.seed, "sample", i));
        const IdiReport idi = compute_idi(small, window);
        if (with_idi) {
            json j        = idi;
            j["fraction"] = config.fractions[i];
            out.write("idi_small" + tag + ".json", dump(j));
        }
        const EpidemicSetup setup = epidemic_setup(config.epidemic, small.population());
        AgentRun run;
        try {
            run = simulate_agents(small, setup.params, setup.contact, setup.initial,
                                  derive_seed(config.seed, "simulate", i + 1), setup.options);
        }
        catch (const std::exception& e) {
            throw std::runtime_error("simulation failed for " + fraction_label(config.fractions[i]) + ": " +
                                     e.what());
        }
        out.write("series_small" + tag + ".csv", to_text([&](std::ostream& os) {
                      write_series_csv(os, run.series);
                  }));
        out.write("run_report_small" + tag + ".json", dump(run_report_json(run, setup.params, setup.contact)));
        const ScalingReport report = make_scaling_report(
            idi.idi, idi_real, config.scaling.k_r, config.frame_multiplier(), config.scaling.k,
            config.scaling.exponent, measure_time_to_threshold(run.series, config.scaling.threshold_fraction));
        json j        = report;
        j["fraction"] = config.fractions[i];
        out.write("scaling" + tag + ".json", dump(j));
    }
}

void stage_compare(OutputSet& out, const ExperimentConfig& config, const WorldModel& world)
{
    const EpidemicSetup setup = epidemic_setup(config.epidemic, world.population());
    for (std::size_t i = 0; i < config.policies.size(); ++i) {
        const std::string tag     = "policy_" + std::to_string(i);
        const PolicyComparison cmp =
            compare_policies(world, config.policies[i], NoPolicy{}, setup, config.scaling.k,
                             config.monte_carlo_seeds, derive_seed(config.seed, "compare", i), config.scaling.exponent);
        out.write(tag + ".json", dump(comparison_to_json(cmp)));
        out.write(tag + "_a.csv", to_text([&](std::ostream& os) {
                      write_series_csv(os, cmp.mean_a);
                  }));
        out.write(tag + "_b.csv", to_text([&](std::ostream& os) {
                      write_series_csv(os, cmp.mean_b);
                  }));
    }
}

template <class Body>
FileList staged(const ExperimentConfig& config, Body&& body)
{
    OutputSet out(config.output_dir);
    body(out);
    out.commit();
    return out.files();
}

} // namespace

FileList run_generate(const ExperimentConfig& config)
{
    return staged(config, [&](OutputSet& out) {
        stage_world(out, "", build_world(config), true);
    });
}

FileList run_sample(const ExperimentConfig& config)
{
    if (config.fractions.empty()) {
        throw ConfigError("fractions", "sample needs at least one fraction");
    }
    return staged(config, [&](OutputSet& out) {
        const WorldModel world = build_world(config);
        for (std::size_t i = 0; i < config.fractions.size(); ++i) {
            const WorldModel small =
                sample_small_world(world, config.fractions[i], derive_seed(config.seed, "sample", i));
            stage_world(out, "small_" + std::to_string(i) + "/", small, true);
        }
    });
}

FileList run_idi(const ExperimentConfig& config, std::ostream& csv_out)
{
    return staged(config, [&](OutputSet& out) {
        const WorldModel world  = build_world(config);
        const TimeWindow window = config.window();
        json reports            = json::array();
        std::ostringstream csv;
        csv << "world,start_frame,end_frame,m,n_cell,sum_c,avg_c,idi,rho1,rho2,conn\n";
        auto emit = [&](const std::string& name, const IdiReport& r, std::optional<double> fraction) {
            json j     = r;
            j["world"] = name;
            if (fraction) {
                j["fraction"] = *fraction;
            }
            reports.push_back(j);
            csv << name << ',' << r.window.start_frame << ',' << r.window.end_frame << ',' << r.m << ','
                << r.n_cell << ',' << r.sum_c << ',' << format_double(r.avg_c) << ',' << format_double(r.idi)
                << ',' << format_double(r.rho1) << ',' << format_double(r.rho2) << ','
                << format_double(r.conn) << '\n';
        };
        emit("real", compute_idi(world, window), std::nullopt);
        for (std::size_t i = 0; i < config.fractions.size(); ++i) {
            const WorldModel small =
                sample_small_world(world, config.fractions[i], derive_seed(config.seed, "sample", i));
            emit("small_" + std::to_string(i), compute_idi(small, window), config.fractions[i]);
        }
        out.write("idi.json", dump(json{{"reports", reports}}));
        csv_out << csv.str();
    });
}

FileList run_simulate(const ExperimentConfig& config)
{
    return staged(config, [&](OutputSet& out) {
        stage_simulation(out, "", build_world(config), config, derive_seed(config.seed, "simulate", 0),
                         "full world");
    });
}

FileList run_scale(const ExperimentConfig& config)
{
    if (config.fractions.empty()) {
        throw ConfigError("fractions", "scale needs at least one fraction");
    }
    return staged(config, [&](OutputSet& out) {
        const WorldModel world = build_world(config);
        stage_scaling(out, config, world, compute_idi(world, config.window()).idi, false);
    });
}

FileList run_compare(const ExperimentConfig& config)
{
    return staged(config, [&](OutputSet& out) {
        stage_compare(out, config, build_world(config));
    });
}

FileList run_validate(const ExperimentConfig& config)
{
    const ValidationReport report = validate_scaling(config);
    return staged(config, [&](OutputSet& out) {
        out.write("validation.json", dump(validation_to_json(report)));
        out.write("validation.csv", to_text([&](std::ostream& os) {
                      write_validation_csv(os, report);
                  }));
    });
}

FileList run_pipeline(const ExperimentConfig& config)
{
    return staged(config, [&](OutputSet& out) {
        const WorldModel world = build_world(config);
        stage_world(out, "", world, false);
        const IdiReport idi_real = compute_idi(world, config.window());
        out.write("idi_real.json", dump(json(idi_real)));
        stage_simulation(out, "_real", world, config, derive_seed(config.seed, "simulate", 0), "full world");
        stage_scaling(out, config, world, idi_real.idi, true);
        stage_compare(out, config, world);
    });
}

} // namespace smallworld
