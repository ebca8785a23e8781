#include "nplab/random.hpp"

namespace nplab {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : key_(mix(seed + kGolden)) {}

Rng::result_type Rng::operator()() {
  ++counter_;
  return mix(key_ + counter_ * kGolden);
}

Rng Rng::split(std::string_view name) const {
  Rng child(0);
  child.key_ = mix(key_ ^ mix(fnv1a(name)));
  return child;
}

Rng Rng::split(std::uint64_t index) const {
  Rng child(0);
  child.key_ = mix(key_ ^ mix(index * kGolden + 0x632be59bd9b4e019ULL));
  return child;
}

double Rng::uniform() {
  // 53 random mantissa bits.
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  return dist(*this);
}

double Rng::normal() { return normal_(*this); }

Vector Rng::normal_vector(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

Matrix Rng::normal_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal();
  return m;
}

RngRoots seed_everything(std::uint64_t seed) {
  Rng root(seed);
  return {root.split("data"), root.split("init"), root.split("noise")};
}

}  // namespace nplab
