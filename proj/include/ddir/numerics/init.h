// Seeded parameter initialization.
#pragma once

#include <cstdint>
#include <string>

#include "ddir/numerics/param_store.h"

namespace ddir::numerics {

// 64-bit FNV-1a hash.
std::uint64_t fnv1a(const std::string& text);

// Adds `name` to the store with elements drawn uniformly from
// [-1/sqrt(fan_in), 1/sqrt(fan_in)]. The stream depends only on (seed, name),
// so a parameter gets the same values whichever model or precision holds it.
template <typename T>
void add_uniform(ParamStore<T>& store, const std::string& name, const Shape& shape,
                 std::size_t fan_in, std::uint64_t seed);

}  // namespace ddir::numerics
