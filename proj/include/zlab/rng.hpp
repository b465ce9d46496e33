#pragma once

// Deterministic random numbers for tests and experiment instances.
// std::normal_distribution's output sequence is implementation-defined, which
// would break byte-identical rerun comparisons, so we roll the two pieces we
// need: splitmix64 for bits, Box-Muller for Gaussians.

#include "zlab/linops.hpp"

#include <cmath>
#include <cstdint>

namespace zlab {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() {
    return double(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    while (u == 0.0) u = next_double();  // avoid log(0)
    const double v = next_double();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * M_PI * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  cxd next_complex_gaussian() {
    const double re = next_gaussian();
    const double im = next_gaussian();
    return {re, im};
  }

  Mat random_matrix(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = next_complex_gaussian();
    return m;
  }

  // Haar-ish unitary via QR of a complex Gaussian matrix, with the usual
  // phase fix so the distribution does not depend on QR sign conventions.
  Mat random_unitary(Eigen::Index d) {
    const Mat g = random_matrix(d, d);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j) {
      const cxd rj = r(j, j);
      if (std::abs(rj) > 0) q.col(j) *= rj / std::abs(rj);
    }
    return q;
  }

  // random Hermitian with entries O(1)
  Mat random_hermitian(Eigen::Index d) {
    const Mat g = random_matrix(d, d);
    return 0.5 * (g + g.adjoint());
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace zlab
