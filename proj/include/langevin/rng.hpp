#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace langevin {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The key is
// the user seed; the upper half of the counter is the stream id, so each
// (seed, stream) pair is an independent, scheduling-independent sequence.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  static Block bijection(Block counter, Key key);

 private:
  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int used_ = 4;
};

// Standard normal variates drawn from one Philox stream.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint64_t stream) : engine_(seed, stream) {}

  double operator()() { return normal_(engine_); }
  double uniform() { return std::generate_canonical<double, 53>(engine_); }
  Philox4x32& engine() { return engine_; }

 private:
  Philox4x32 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace langevin
