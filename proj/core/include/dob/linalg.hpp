#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

namespace dob {

using Eigenvalues = std::vector<std::complex<double>>;

/// Eigenvalues sorted by descending real part, then descending imaginary
/// part. 2x2 matrices use the closed form, larger ones are balanced first.
Eigenvalues eigenvalues(const Eigen::MatrixXd& m);

double spectral_radius(const Eigen::MatrixXd& m);

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& m);

/// Extreme eigenvalues of the symmetric part of m.
double min_symmetric_eigenvalue(const Eigen::MatrixXd& m);
double max_symmetric_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace dob
