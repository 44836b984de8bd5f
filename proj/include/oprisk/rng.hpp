#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

namespace oprisk {

/// Independent random stream keyed by a seed and a path of indices, e.g.
/// (seed, combination, replication). Streams with different keys never share
/// state, so results do not depend on scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::mt19937_64& engine() { return engine_; }
  double standard_normal() { return normal_(engine_); }
  /// "seed/i/j" form of the key.
  const std::string& id() const { return id_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::string id_;
};

}  // namespace oprisk
