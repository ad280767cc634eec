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

#include "smallworld/scaling.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smallworld
{

TimeScaling time_scaling_ratio(double idi_a, double idi_b, int exponent)
{
    if (!(idi_a > 0.0) || !(idi_b > 0.0)) {
        throw std::invalid_argument("time scaling needs positive IDI values");
    }
    if (exponent != 1 && exponent != 3) {
        throw std::invalid_argument("time scaling exponent must be 1 or 3");
    }
    const double base = idi_a / idi_b;
    return {exponent == 1 ? base : base * base * base, exponent, idi_a, idi_b};
}

double contact_ratio(double idi_small, double idi_real, double k_r)
{
    if (!(idi_real > 0.0)) {
        throw std::invalid_argument("contact ratio needs a positive real-world IDI");
    }
    if (!(k_r >= 0.0)) {
        throw std::invalid_argument("k_r must be non-negative");
    }
    return k_r * idi_small / idi_real;
}

double compound_limit(double r, long long n)
{
    if (n < 1) {
        throw std::invalid_argument("compounding periods must be at least 1");
    }
    const double step = r / static_cast<double>(n);
    if (!(1.0 + step > 0.0)) {
        throw std::domain_error("1 + r/n must be positive");
    }
    return std::exp(static_cast<double>(n) * std::log1p(step));
}

double number_scaling_factor(double r)
{
    return std::exp(r);
}

EpidemicSeries map_to_real(const EpidemicSeries& series, double f)
{
    if (!(f > 0.0)) {
        throw std::invalid_argument("number scaling factor must be positive");
    }
    EpidemicSeries out = series;
    for (CompartmentState& x : out.states) {
        x.s *= f;
        x.e *= f;
        x.i *= f;
        x.r *= f;
    }
    for (double& c : out.cell_infected) {
        c *= f;
    }
    return out;
}

double policy_factor_ratio(double idi_a, double idi_b, double k)
{
    return std::exp(k * (idi_a - idi_b));
}

CalibrationFit calibrate_k(std::span<const std::pair<double, double>> points)
{
    if (points.size() < 2) {
        throw std::invalid_argument("calibration needs at least two points");
    }
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const auto& [idi, f] : points) {
        if (!(f > 0.0)) {
            throw std::invalid_argument("calibration factors must be positive");
        }
        mean_x += idi;
        mean_y += std::log(f);
    }
    const auto n = static_cast<double>(points.size());
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& [idi, f] : points) {
        sxx += (idi - mean_x) * (idi - mean_x);
        sxy += (idi - mean_x) * (std::log(f) - mean_y);
    }
    if (!(sxx > 0.0)) {
        throw std::invalid_argument("calibration needs at least two distinct IDI values");
    }
    CalibrationFit fit;
    fit.k         = sxy / sxx;
    fit.intercept = mean_y - fit.k * mean_x;
    double ss     = 0.0;
    for (const auto& [idi, f] : points) {
        const double e = std::log(f) - (fit.k * idi + fit.intercept);
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    fit.points.assign(points.begin(), points.end());
    return fit;
}

std::optional<std::size_t> measure_time_to_threshold(const EpidemicSeries& series, double threshold_fraction)
{
    if (!(threshold_fraction > 0.0) || threshold_fraction > 1.0) {
        throw std::invalid_argument("threshold fraction must lie in (0, 1]");
    }
    const double target = threshold_fraction * series.population() * (1.0 - 1e-12);
    for (std::size_t k = 0; k < series.states.size(); ++k) {
        if (series.states[k].ever_infected() >= target && series.states[k].ever_infected() > 0.0) {
            return k;
        }
    }
    return std::nullopt;
}

ScalingReport make_scaling_report(double idi_small, double idi_real, double k_r, long long n, double k,
                                  int exponent, std::optional<std::size_t> time_to_threshold_small)
{
    ScalingReport report;
    report.idi_small  = idi_small;
    report.idi_real   = idi_real;
    report.r          = contact_ratio(idi_small, idi_real, k_r);
    report.n          = n;
    report.f          = number_scaling_factor(report.r);
    report.f_compound = compound_limit(report.r, n);
    report.k          = k;
    report.exponent   = exponent;
    report.time_ratio = time_scaling_ratio(idi_small, idi_real, exponent).ratio;
    report.time_to_threshold_small = time_to_threshold_small;
    if (time_to_threshold_small) {
        report.predicted_time_real = static_cast<double>(*time_to_threshold_small) * report.time_ratio;
    }
    return report;
}

} // namespace smallworld
