#ifndef SCOS_RNG_HPP
#define SCOS_RNG_HPP

#include "scos/types.hpp"

#include <cstdint>

namespace scos {

// Philox4x32-10 counter-based generator. A (seed, stream) pair selects an
// independent substream; draws depend only on that pair and the draw index,
// so results are identical across platforms and across threading layouts.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();
  // Standard normal via Box-Muller; second value of each pair is cached.
  double gaussian();

  // Uniform integer on [0, n), n >= 1, by rejection (unbiased).
  std::uint64_t uniform_index(std::uint64_t n);

  // Fills in column-major storage order.
  Matrix gaussian_matrix(Index rows, Index cols);

  // One raw 10-round keyed block; exposed so the generator can be checked
  // against the published test vectors.
  static void philox_block(const std::uint32_t key[2],
                           const std::uint32_t counter[4],
                           std::uint32_t out[4]);

 private:
  void advance_block();

  std::uint32_t key_[2];
  std::uint32_t counter_[4];
  std::uint32_t block_[4];
  int block_pos_;
  double cached_gaussian_;
  bool has_cached_gaussian_;
};

}  // namespace scos

#endif
