#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace nagflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Induced 2-norm (largest singular value).
double spectral_norm(const Matrix& m);

/// Assemble [[a, b], [c, d]] from four equally sized square blocks.
Matrix block2(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d);

/// Eigenvalues of a general real matrix, sorted by descending real part
/// (ties broken by descending imaginary part).
std::vector<std::complex<double>> eigenvalues(const Matrix& m);

double max_real_part(const std::vector<std::complex<double>>& spectrum);

/// Sum of the matrices in `terms` by pairwise (tree) reduction. The order of
/// additions depends only on `terms.size()`.
Matrix pairwise_sum(std::vector<Matrix> terms);

}  // namespace nagflow
