#include "mspk/rng.hpp"

#include <cmath>
#include <numbers>

namespace mspk {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_ctr(std::uint64_t key, std::uint64_t ctr) {
  std::uint64_t z = key ^ (ctr * kGolden);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double to_unit(std::uint64_t x) {  // [0, 1)
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream))) {}

RngStream RngStream::substream(std::uint64_t id) const {
  RngStream s(key_, mix64(id ^ 0xa5a5a5a5a5a5a5a5ULL));
  return s;
}

std::uint64_t RngStream::next_u64() { return hash_ctr(key_, ctr_++); }

double RngStream::uniform() { return to_unit(next_u64()); }

double RngStream::uniform_pos() { return 1.0 - uniform(); }

double RngStream::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  spare_ = rad * std::sin(ang);
  have_spare_ = true;
  return rad * std::cos(ang);
}

double RngStream::exponential() { return -std::log(uniform_pos()); }

void RngStream::fill_gaussian(std::span<double> out) {
  // Chunked planar passes (radius, angle, then the two outputs) so each
  // loop carries a single vectorizable math call; counter layout matches
  // repeated scalar draws.
  const std::uint64_t key = key_;
  const std::size_t n = out.size();
  const std::size_t pairs = n / 2;
  const std::uint64_t base = ctr_;
  constexpr std::size_t kChunk = 512;
  double rad[kChunk], ang[kChunk];
  for (std::size_t off = 0; off < pairs; off += kChunk) {
    const std::size_t c = std::min(kChunk, pairs - off);
    const std::uint64_t b = base + 2 * off;
    for (std::size_t p = 0; p < c; ++p)
      rad[p] = std::sqrt(-2.0 * std::log(1.0 - to_unit(hash_ctr(key, b + 2 * p))));
    for (std::size_t p = 0; p < c; ++p)
      ang[p] = 2.0 * std::numbers::pi * to_unit(hash_ctr(key, b + 2 * p + 1));
    double* o = out.data() + 2 * off;
    for (std::size_t p = 0; p < c; ++p) o[2 * p] = rad[p] * std::cos(ang[p]);
    for (std::size_t p = 0; p < c; ++p) o[2 * p + 1] = rad[p] * std::sin(ang[p]);
  }
  ctr_ += 2 * pairs;
  if (n % 2) out[n - 1] = gaussian();
}

void RngStream::fill_exponential(std::span<double> out) {
  const std::uint64_t key = key_;
  const std::uint64_t base = ctr_;
  double* o = out.data();
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i)
    o[i] = -std::log(1.0 - to_unit(hash_ctr(key, base + i)));
  ctr_ += n;
}

}  // namespace mspk
