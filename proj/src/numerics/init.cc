#include "ddir/numerics/init.h"

#include <cmath>
#include <random>

namespace ddir::numerics {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
void add_uniform(ParamStore<T>& store, const std::string& name, const Shape& shape,
                 std::size_t fan_in, std::uint64_t seed) {
  if (fan_in == 0) throw UsageError("add_uniform: fan_in of '" + name + "' is zero");
  const std::uint64_t h = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  std::mt19937_64 rng(seq);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> value(shape);
  for (std::size_t i = 0; i < value.size(); ++i) value[i] = static_cast<T>(dist(rng));
  store.add(name, std::move(value));
}

template void add_uniform<float>(ParamStore<float>&, const std::string&, const Shape&,
                                 std::size_t, std::uint64_t);
template void add_uniform<double>(ParamStore<double>&, const std::string&, const Shape&,
                                  std::size_t, std::uint64_t);

}  // namespace ddir::numerics
