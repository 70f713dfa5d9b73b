#include "nagflow/linalg.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace nagflow {

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Matrix block2(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d) {
  const Index n = a.rows();
  if (a.cols() != n || b.rows() != n || b.cols() != n || c.rows() != n || c.cols() != n ||
      d.rows() != n || d.cols() != n) {
    throw std::invalid_argument("block2: blocks must be square and of equal size");
  }
  Matrix out(2 * n, 2 * n);
  out << a, b, c, d;
  return out;
}

std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigenvalues: eigensolver did not converge");
  }
  const auto& ev = solver.eigenvalues();
  std::vector<std::complex<double>> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  return out;
}

double max_real_part(const std::vector<std::complex<double>>& spectrum) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& z : spectrum) best = std::max(best, z.real());
  return best;
}

Matrix pairwise_sum(std::vector<Matrix> terms) {
  if (terms.empty()) throw std::invalid_argument("pairwise_sum: no terms");
  while (terms.size() > 1) {
    std::vector<Matrix> next;
    next.reserve((terms.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < terms.size(); i += 2) next.push_back(terms[i] + terms[i + 1]);
    if (terms.size() % 2 == 1) next.push_back(std::move(terms.back()));
    terms = std::move(next);
  }
  return std::move(terms.front());
}

}  // namespace nagflow
