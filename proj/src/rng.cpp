#include "oprisk/rng.hpp"

namespace oprisk {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 2));
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  push(path.size());
  for (std::uint64_t v : path) push(v);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
    : engine_(seeded_engine(seed, path)), id_(std::to_string(seed)) {
  for (std::uint64_t v : path) id_ += "/" + std::to_string(v);
}

}  // namespace oprisk
