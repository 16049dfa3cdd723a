#ifndef WHEELPRED_GP_INDUCING_HPP
#define WHEELPRED_GP_INDUCING_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "wheelpred/gp/kernel.hpp"
#include "wheelpred/rng.hpp"

namespace wheelpred::gp {

inline constexpr int kKMeansIterations = 10;

/// M cluster centres of the rows of X: farthest-point initialization from a
/// seeded first pick, then Lloyd iterations. Ties go to the lowest index and
/// empty clusters keep their centre.
template <typename Scalar>
Matrix<Scalar> select_inducing(const Matrix<Scalar>& x, Eigen::Index m, std::uint64_t seed,
                               int iterations = kKMeansIterations) {
  const Eigen::Index n = x.rows();
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "need at least one inducing point");
  if (m > n) {
    throw Error(ErrorCode::TooFewPoints, "requested " + std::to_string(m) +
                                             " inducing points from " + std::to_string(n) +
                                             " rows");
  }
  const Matrix<Scalar> xt = x.transpose();  // one point per column
  Rng rng(seed);

  Matrix<Scalar> centres(x.cols(), m);
  Eigen::Index first = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
  centres.col(0) = xt.col(first);
  Vector<Scalar> nearest = (xt.colwise() - centres.col(0)).colwise().squaredNorm().transpose();
  for (Eigen::Index c = 1; c < m; ++c) {
    Eigen::Index pick = 0;
    nearest.maxCoeff(&pick);
    centres.col(c) = xt.col(pick);
    nearest = nearest.cwiseMin((xt.colwise() - centres.col(c)).colwise().squaredNorm().transpose());
  }

  std::vector<Eigen::Index> assignment(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < iterations; ++iter) {
    // assignment step
    Vector<Scalar> best = Vector<Scalar>::Constant(n, std::numeric_limits<Scalar>::infinity());
    for (Eigen::Index c = 0; c < m; ++c) {
      const Vector<Scalar> d = (xt.colwise() - centres.col(c)).colwise().squaredNorm().transpose();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d(i) < best(i)) {
          best(i) = d(i);
          assignment[static_cast<std::size_t>(i)] = c;
        }
      }
    }
    // update step, accumulated as offsets from the current centre
    Matrix<Scalar> sums = Matrix<Scalar>::Zero(x.cols(), m);
    Vector<Scalar> counts = Vector<Scalar>::Zero(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index c = assignment[static_cast<std::size_t>(i)];
      sums.col(c) += xt.col(i) - centres.col(c);
      counts(c) += 1;
    }
    bool moved = false;
    for (Eigen::Index c = 0; c < m; ++c) {
      if (counts(c) == 0) continue;
      const Vector<Scalar> updated = centres.col(c) + sums.col(c) / counts(c);
      if (counts(c) == 1) {
        // keep the exact row rather than a rounded mean
        for (Eigen::Index i = 0; i < n; ++i) {
          if (assignment[static_cast<std::size_t>(i)] == c) {
            moved = moved || centres.col(c) != xt.col(i);
            centres.col(c) = xt.col(i);
            break;
          }
        }
        continue;
      }
      moved = moved || centres.col(c) != updated;
      centres.col(c) = updated;
    }
    if (!moved) break;
  }
  return centres.transpose();
}

}  // namespace wheelpred::gp

#endif  // WHEELPRED_GP_INDUCING_HPP
