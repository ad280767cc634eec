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

#ifndef SMALLWORLD_SCALING_H
#define SMALLWORLD_SCALING_H

#include "smallworld/seir.h"

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace smallworld
{

struct TimeScaling {
    double ratio = 1.0; ///< (idi_a / idi_b)^exponent
    int exponent = 1;
    double idi_a = 0.0;
    double idi_b = 0.0;
};

/**
 * Ratio of spread speeds of two worlds from their IDIs. exponent 1 gives the
 * linear comparison, exponent 3 the cubic proportionality. Throws
 * std::invalid_argument on a non-positive IDI or an exponent other than 1 or 3.
 */
TimeScaling time_scaling_ratio(double idi_a, double idi_b, int exponent = 1);

/// r = k_r * idi_small / idi_real.
double contact_ratio(double idi_small, double idi_real, double k_r);

/// (1 + r/n)^n, which tends to exp(r) as n grows.
double compound_limit(double r, long long n);

/// F = exp(r).
double number_scaling_factor(double r);

/**
 * Scale a small-world series to the real world: every channel, including the
 * per-cell infected counts, is multiplied by f, which keeps S + E + I + R equal
 * to f times the small-world population.
 */
EpidemicSeries map_to_real(const EpidemicSeries& series, double f);

/// F_a / F_b = exp(k * (idi_a - idi_b)).
double policy_factor_ratio(double idi_a, double idi_b, double k);

struct CalibrationFit {
    double k         = 0.0;
    double intercept = 0.0;
    double residual  = 0.0; ///< RMS of ln f residuals
    std::vector<std::pair<double, double>> points;
};

/// Least squares of ln f = k * idi + intercept over (idi, f) pairs.
CalibrationFit calibrate_k(std::span<const std::pair<double, double>> points);

/**
 * First entry whose E + I + R reaches threshold_fraction of the population,
 * or nothing if the series never gets there.
 */
std::optional<std::size_t> measure_time_to_threshold(const EpidemicSeries& series, double threshold_fraction);

struct ScalingReport {
    double idi_small = 0.0;
    double idi_real  = 0.0;
    double r         = 0.0;
    long long n      = 1;
    double f         = 1.0; ///< exp(r)
    double f_compound = 1.0; ///< (1 + r/n)^n
    double k         = 0.0;
    int exponent     = 1;
    double time_ratio = 1.0; ///< spread-speed ratio small / real
    std::optional<std::size_t> time_to_threshold_small;
    std::optional<double> predicted_time_real;
};

/**
 * Assemble a ScalingReport. The predicted real-world time-to-threshold is the
 * small-world time multiplied by the speed ratio, since a world spreading
 * faster crosses a threshold proportionally sooner.
 */
ScalingReport make_scaling_report(double idi_small, double idi_real, double k_r, long long n, double k,
                                  int exponent, std::optional<std::size_t> time_to_threshold_small);

} // namespace smallworld

#endif // SMALLWORLD_SCALING_H
