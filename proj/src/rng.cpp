#include "vagtm/rng.hpp"

namespace vagtm {

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n,
                                                         std::size_t k) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  // partial Fisher-Yates: the first k slots end up as the sample
  for (std::size_t i = 0; i < k && i < n; ++i) {
    std::swap(pool[i], pool[i + uniform_int(n - i)]);
  }
  pool.resize(k < n ? k : n);
  return pool;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

}  // namespace vagtm
