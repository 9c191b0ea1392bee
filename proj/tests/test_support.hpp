#ifndef CRAN_TEST_SUPPORT_HPP
#define CRAN_TEST_SUPPORT_HPP

#include <random>

#include "cran/linalg.hpp"

namespace cran::test {

inline CVectorXd random_cvector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  CVectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = {nd(rng), nd(rng)};
  return v;
}

inline HermitianMatrixXd random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  CMatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = {nd(rng), nd(rng)};
  return HermitianMatrixXd(m);
}

inline HermitianMatrixXd random_psd(std::mt19937_64& rng, Eigen::Index n, Eigen::Index rank) {
  HermitianMatrixXd a = HermitianMatrixXd::Zero(n);
  for (Eigen::Index r = 0; r < rank; ++r) a += HermitianMatrixXd::Outer(random_cvector(rng, n));
  return a;
}

/// Reconstruction sum_i lambda_i u_i u_i^H.
inline CMatrixXd reconstruct(const EigenDecomposition<double>& e) {
  return e.eigenvectors * e.eigenvalues.cast<std::complex<double>>().asDiagonal() * e.eigenvectors.adjoint();
}

}  // namespace cran::test

#endif
