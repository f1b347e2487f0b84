#pragma once

// Reference computations that share no code with the library: the matrix
// exponential comes from Eigen's MatrixFunctions module and integrals are
// taken by Gauss-Legendre quadrature.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "dob/disturbance.hpp"
#include "dob/servo_model.hpp"

namespace dob::testing {

inline Eigen::MatrixXd expm(const Eigen::MatrixXd& m) { return m.exp(); }

inline Eigen::Matrix2d continuous_A(double J, double b) {
  Eigen::Matrix2d A;
  A << 0.0, 1.0, 0.0, -b / J;
  return A;
}

inline Eigen::Vector2d continuous_B(double J) { return {0.0, 1.0 / J}; }

// Van Loan: the top-right column of exp(M) with
//   M = [[A Ts, B Ts, 0, ..], [0, 0, 1, ..], ..., [0, .., 0]]
// of chain length order + 1 is int_0^1 e^{A Ts r} (1 - r)^order / order! B Ts dr,
// which is Ts^-order times int_0^Ts e^{A s} (Ts - s)^order / order! B ds.
// Working in units of Ts keeps the blocks of M comparable in size; in raw
// seconds the tiny top-right block drowns in the Pade error of the rest.
inline Eigen::Vector2d van_loan_input(const Eigen::Matrix2d& A, const Eigen::Vector2d& B, double Ts,
                                      int order) {
  const int n = 2 + order + 1;
  const double scale = B.norm();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  M.topLeftCorner(2, 2) = A * Ts;
  M.block(0, 2, 2, 1) = B / scale * Ts;
  for (int i = 0; i < order; ++i) M(2 + i, 3 + i) = 1.0;
  const Eigen::MatrixXd E = expm(M);
  return E.block(0, n - 1, 2, 1) * scale * std::pow(Ts, order);
}

struct DiscreteOracle {
  Eigen::Matrix2d A;
  Eigen::Vector2d B;
  Eigen::Vector2d D_tilde;
};

inline DiscreteOracle discretize_oracle(double J, double b, double Ts) {
  const Eigen::Matrix2d A = continuous_A(J, b);
  const Eigen::Vector2d B = continuous_B(J);
  return {expm(A * Ts), van_loan_input(A, B, Ts, 0), van_loan_input(A, B, Ts, 1)};
}

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
inline const std::array<std::pair<double, double>, 8>& gauss_legendre8() {
  static const std::array<std::pair<double, double>, 8> rule{{
      {-0.9602898564975363, 0.1012285362903763},
      {-0.7966664774136267, 0.2223810344533745},
      {-0.5255324099163290, 0.3137066458778873},
      {-0.1834346424956498, 0.3626837833783620},
      {0.1834346424956498, 0.3626837833783620},
      {0.5255324099163290, 0.3137066458778873},
      {0.7966664774136267, 0.2223810344533745},
      {0.9602898564975363, 0.1012285362903763},
  }};
  return rule;
}

// Composite Gauss-Legendre on [a, b], cut at `cuts` and split into `panels`
// pieces between cuts.
inline Eigen::Vector2d integrate(const std::function<Eigen::Vector2d(double)>& f, double a, double b,
                                 std::vector<double> cuts, int panels) {
  std::vector<double> edges{a};
  for (double c : cuts) {
    if (c > a && c < b) edges.push_back(c);
  }
  edges.push_back(b);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (size_t e = 0; e + 1 < edges.size(); ++e) {
    const double h = (edges[e + 1] - edges[e]) / panels;
    for (int p = 0; p < panels; ++p) {
      const double lo = edges[e] + p * h;
      for (const auto& [x, w] : gauss_legendre8()) {
        sum += 0.5 * h * w * f(lo + 0.5 * h * (x + 1.0));
      }
    }
  }
  return sum;
}

// Pi(k) = int_{kTs}^{(k+1)Ts} e^{A ((k+1)Ts - t)} B tau(t) dt.
inline Eigen::Vector2d increment_oracle(double J, double b, const DisturbanceSignal& signal, long k,
                                        double Ts, std::vector<double> cuts = {}) {
  const Eigen::Matrix2d A = continuous_A(J, b);
  const Eigen::Vector2d B = continuous_B(J);
  const double t0 = static_cast<double>(k) * Ts;
  const double t1 = static_cast<double>(k + 1) * Ts;
  auto f = [&](double t) -> Eigen::Vector2d {
    const Eigen::Matrix2d E = expm(A * (t1 - t));
    return E * B * eval_disturbance(signal, t);
  };
  return integrate(f, t0, t1, std::move(cuts), 8);
}

inline double relative_error(const Eigen::MatrixXd& x, const Eigen::MatrixXd& ref) {
  const double scale = ref.norm();
  const double diff = (x - ref).norm();
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace dob::testing
