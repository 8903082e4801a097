#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "hetsca/linalg.hpp"

namespace hetsca {

/// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as
/// 1, 2, 3", SC'11). Counter-based: output block i is a pure function of
/// (key, counter), so draws are portable across platforms and compilers.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

/// Sequential draws from one Philox stream. The 64-bit seed is the key;
/// counter words 0-1 hold the block position and word 2 the stream id, so
/// different stream ids never overlap.
///
/// Normals use Box-Muller on our own uniforms rather than
/// std::normal_distribution, whose algorithm is implementation-defined.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint32_t stream_id) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  /// Uniform on (0, 1].
  double uniform_open_closed() noexcept;
  double normal() noexcept;
  /// Circularly symmetric complex Gaussian with the given variance in each
  /// of the real and imaginary parts.
  Complex complex_normal(double variance_per_dim) noexcept;

  /// rows x cols matrix of iid complex_normal draws (column-major fill).
  CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, double variance_per_dim);

 private:
  Philox4x32::Key key_;
  std::uint32_t stream_id_;
  std::uint64_t position_ = 0;
  Philox4x32::Counter buffer_{};
  int buffered_ = 0;
  std::optional<double> spare_normal_;
};

/// Stream ids used by the library. Fixtures depend on this layout.
namespace streams {
inline constexpr std::uint32_t kPositions = 0;
inline constexpr std::uint32_t kShadowing = 1;
inline constexpr std::uint32_t kChannels = 2;
inline constexpr std::uint32_t kBudgets = 3;
inline constexpr std::uint32_t kInitialization = 16;
inline constexpr std::uint32_t kDiagnostics = 32;
}  // namespace streams

}  // namespace hetsca
