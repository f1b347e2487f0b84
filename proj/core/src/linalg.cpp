#include "dob/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dob/errors.hpp"

namespace dob {
namespace {

// Diagonal similarity scaling so rows and columns have comparable norms.
Eigen::MatrixXd balance(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  for (int sweep = 0; sweep < 20; ++sweep) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double f = std::sqrt(r / c);
      if (std::abs(std::log(f)) < 0.05) continue;
      a.col(i) *= f;
      a.row(i) /= f;
      changed = true;
    }
    if (!changed) break;
  }
  return a;
}

Eigenvalues eig2(const Eigen::MatrixXd& m) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  const double half_tr = 0.5 * (a + d);
  const double half_diff = 0.5 * (a - d);
  const double disc = half_diff * half_diff + b * c;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    // Stable pair: the larger-magnitude root directly, the other from det.
    const double big = half_tr >= 0.0 ? half_tr + s : half_tr - s;
    const double det = a * d - b * c;
    const double other = big != 0.0 ? det / big : 0.0;
    return {big, other};
  }
  const double s = std::sqrt(-disc);
  return {{half_tr, s}, {half_tr, -s}};
}

}  // namespace

Eigenvalues eigenvalues(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ValidationError("eigenvalues of a non-square matrix");
  if (!m.allFinite()) throw ValidationError("eigenvalues of a non-finite matrix");
  Eigenvalues out;
  if (m.rows() == 0) return out;
  if (m.rows() == 1) {
    out.emplace_back(m(0, 0), 0.0);
  } else if (m.rows() == 2) {
    out = eig2(m);
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(balance(m), false);
    if (es.info() != Eigen::Success) {
      throw ConvergenceError("eigenvalue iteration failed", 0.0);
    }
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      out.push_back(es.eigenvalues()(i));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  return out;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  double r = 0.0;
  for (const auto& l : eigenvalues(m)) r = std::max(r, std::abs(l));
  return r;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double min_symmetric_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_symmetric_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace dob
