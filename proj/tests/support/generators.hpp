#pragma once

#include <vector>

#include <Eigen/Dense>

#include "dob/servo_model.hpp"
#include "rng.hpp"

namespace dob::testing {

struct RandomModel {
  double J = 1.0;
  double b = 0.0;
  double Ts = 1e-3;
};

// Inertia over four decades; friction rate b/J is zero, tiny (exercising the
// series branch) or anywhere up to 1e3 /s; Ts from 10 us to 10 ms.
inline RandomModel random_model(Rng& rng) {
  RandomModel m;
  m.J = rng.log_uniform(1e-4, 1.0);
  const double pick = rng.unit();
  double rate = 0.0;
  if (pick < 0.15) {
    rate = 0.0;
  } else if (pick < 0.3) {
    rate = rng.log_uniform(1e-9, 1e-3);
  } else {
    rate = rng.log_uniform(1e-3, 1e3);
  }
  m.b = rate * m.J;
  m.Ts = rng.log_uniform(1e-5, 1e-2);
  return m;
}

// Real spec inside (-0.95, 0.95), entries at least `gap` apart.
inline std::vector<double> random_spec(Rng& rng, int count, double gap = 1e-3) {
  std::vector<double> s;
  while (static_cast<int>(s.size()) < count) {
    const double v = rng.uniform(-0.95, 0.95);
    bool ok = true;
    for (double x : s) ok = ok && std::abs(x - v) >= gap;
    if (ok) s.push_back(v);
  }
  return s;
}

// Entries uniform in [-1, 1], rescaled to spectral radius `radius`.
inline Eigen::MatrixXd random_matrix(Rng& rng, int n, double radius) {
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) G(i, j) = rng.uniform(-1.0, 1.0);
  }
  const double rho = G.eigenvalues().cwiseAbs().maxCoeff();
  if (rho < 1e-6) return random_matrix(rng, n, radius);
  return G * (radius / rho);
}

}  // namespace dob::testing
