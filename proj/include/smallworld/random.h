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

#ifndef SMALLWORLD_RANDOM_H
#define SMALLWORLD_RANDOM_H

#include <cstdint>
#include <random>
#include <string_view>

namespace smallworld
{

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/**
 * Derive a child seed from (root, stage, index).
 *
 * Every random stream in the toolkit is obtained this way, so a whole run is
 * reproducible from its root seed. The stage name is hashed with FNV-1a and
 * combined with the index before a final splitmix64 round.
 */
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stage, std::uint64_t index = 0)
{
    return Rng(derive_seed(root, stage, index));
}

} // namespace smallworld

#endif // SMALLWORLD_RANDOM_H
