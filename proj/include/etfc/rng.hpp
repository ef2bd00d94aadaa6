#ifndef ETFC_RNG_HPP
#define ETFC_RNG_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace etfc {

// Seeded generator with a platform-stable uniform mapping. std::mt19937_64 is
// fully specified by the standard; the distributions are not, so sampling goes
// through the explicit 53-bit mantissa construction instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  Eigen::VectorXd uniform_vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace etfc

#endif
