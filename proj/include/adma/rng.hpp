#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace adma {

// splitmix64 finalizer. Used to derive independent stream seeds from a master
// seed so that (seed, rep) pairs map to well-separated generator states.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 1));
}

// Deterministic source with a pinned bit-to-double recipe so streams can be
// reproduced outside this codebase:
//   engine   mt19937_64 seeded directly with the 64-bit seed
//   uniform  (x >> 11) * 2^-53                 in [0, 1)
//   normal   Box-Muller, no caching: u1 = 1 - uniform() (so u1 in (0,1]),
//            u2 = uniform(), z = sqrt(-2 ln u1) * cos(2 pi u2);
//            every normal consumes exactly two engine outputs
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double normal() {
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace adma
