#include "bootlin/prng.hpp"

#include "bootlin/errors.hpp"
#include "bootlin/stats.hpp"

#include <utility>

namespace bootlin {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Finalizer from SplitMix64; full avalanche on 64 bits.
std::uint64_t
mix64(std::uint64_t z)
{
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t
absorb(std::uint64_t key, std::uint64_t word)
{
  // Order-sensitive sponge: absorb(absorb(k, a), b) != absorb(absorb(k, b), a).
  return mix64((key + kGolden) ^ mix64(word + kGolden));
}

} // namespace

RngStream::RngStream(std::uint64_t root_seed)
  : root_seed_(root_seed)
  , key_(absorb(0x243f6a8885a308d3ULL, root_seed))
{
}

RngStream::RngStream(std::uint64_t root_seed, std::vector<std::uint32_t> path,
                     std::uint64_t key)
  : root_seed_(root_seed)
  , path_(std::move(path))
  , key_(key)
{
}

RngStream
RngStream::derive(std::uint32_t index) const
{
  std::vector<std::uint32_t> child_path = path_;
  child_path.push_back(index);
  return RngStream(root_seed_, std::move(child_path), absorb(key_, index));
}

std::uint64_t
RngStream::next_u64()
{
  return mix64(key_ + (++counter_) * kGolden);
}

double
RngStream::next_uniform01()
{
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double
RngStream::next_standard_normal()
{
  // u in (0, 1): the 53-bit grid excludes 1; shift zero off the boundary.
  double u = next_uniform01();
  if (u <= 0.0) {
    u = 0x1.0p-54;
  }
  return stats::normal_quantile(u);
}

std::uint64_t
RngStream::next_index(std::uint64_t k)
{
  if (k == 0) {
    throw domain_error("next_index: k must be >= 1");
  }
  if (k == 1) {
    return 0;
  }
  // Rejection below the largest multiple of k keeps every value at 1/k.
  const std::uint64_t limit = (~std::uint64_t{ 0 } / k) * k;
  for (;;) {
    const std::uint64_t word = next_u64();
    if (word < limit) {
      return word % k;
    }
  }
}

std::vector<double>
RngStream::uniform01(std::size_t n)
{
  std::vector<double> out(n);
  for (auto& v : out) {
    v = next_uniform01();
  }
  return out;
}

std::vector<double>
RngStream::standard_normal(std::size_t n)
{
  std::vector<double> out(n);
  for (auto& v : out) {
    v = next_standard_normal();
  }
  return out;
}

std::vector<std::uint32_t>
RngStream::categorical_uniform(std::size_t n, std::uint32_t k)
{
  if (k == 0) {
    throw domain_error("categorical_uniform: k must be >= 1");
  }
  std::vector<std::uint32_t> out(n);
  for (auto& v : out) {
    v = static_cast<std::uint32_t>(next_index(k));
  }
  return out;
}

} // namespace bootlin
