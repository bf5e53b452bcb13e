#pragma once

#include <cstdint>
#include <span>

namespace mspk {

/// Counter-based random stream.  A draw is a pure function of
/// (key, counter), so any element of the stream can be produced
/// independently of the others.  Substreams derived from disjoint ids
/// are independent for all practical purposes, which lets parallel
/// Monte Carlo loops assign one substream per work item and produce
/// results that do not depend on the number of workers.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent stream derived from this one; does not advance the counter.
  RngStream substream(std::uint64_t id) const;

  std::uint64_t next_u64();
  double uniform();      // [0, 1)
  double uniform_pos();  // (0, 1]
  double gaussian();     // N(0, 1)
  double exponential();  // Exp(1)

  /// Bulk fills; equivalent to repeated scalar calls but vectorizable.
  void fill_gaussian(std::span<double> out);
  void fill_exponential(std::span<double> out);

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mspk
