#pragma once

#include <cstdint>
#include <vector>

namespace bootlin {

//! Deterministic, splittable random stream.
//!
//! A stream is identified by a 64-bit root seed and a path of 32-bit
//! indices. Output words are produced counter-style: word i is a hash of
//! (key, i), where the key itself is a hash of (root_seed, path). Deriving
//! a child appends one index to the path, so derived streams are pure
//! values: the same (root_seed, path) always produces the same sequence,
//! independent of which worker draws from it or of any other stream.
//!
//! Normal variates are produced by applying the inverse normal CDF to a
//! 53-bit uniform; this keeps one draw == one counter step, which makes
//! sequences reproducible across platforms.
//!
//! Not cryptographic. A stream is cheap to copy; a single instance must
//! not be shared by concurrent writers because drawing advances a counter.
class RngStream
{
public:
  explicit RngStream(std::uint64_t root_seed = 0);

  //! Child stream whose sequence is a pure function of
  //! (root_seed, path ++ index). Does not disturb the parent.
  RngStream derive(std::uint32_t index) const;

  std::uint64_t root_seed() const { return root_seed_; }
  const std::vector<std::uint32_t>& path() const { return path_; }

  //! Next raw 64-bit word.
  std::uint64_t next_u64();

  //! Uniform draw in [0, 1) with 53 random bits.
  double next_uniform01();

  //! Standard normal draw via the inverse CDF.
  double next_standard_normal();

  //! Uniform draw from {0, ..., k-1}; each value has probability exactly
  //! 1/k (rejection sampling on the 64-bit word). k = 0 is a domain error.
  std::uint64_t next_index(std::uint64_t k);

  std::vector<double> uniform01(std::size_t n);
  std::vector<double> standard_normal(std::size_t n);
  std::vector<std::uint32_t> categorical_uniform(std::size_t n, std::uint32_t k);

private:
  RngStream(std::uint64_t root_seed, std::vector<std::uint32_t> path,
            std::uint64_t key);

  std::uint64_t root_seed_;
  std::vector<std::uint32_t> path_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

} // namespace bootlin
