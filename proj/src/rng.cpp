#include "isa/rng.hpp"

#include <cmath>
#include <numbers>

namespace isa {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t make_key(std::uint64_t seed, std::uint64_t stream_id) {
  return mix64(mix64(seed + kGolden) ^ mix64(stream_id * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(make_key(seed, stream_id)) {}

RngStream::result_type RngStream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

RngStream RngStream::substream(std::uint64_t id) const {
  // Children are keyed off the parent key, so distinct parents give
  // distinct families of children.
  return RngStream(key_, id);
}

}  // namespace isa
