#pragma once

// Normative numeric constants shared by every module. Tests and the CLI read
// them from here; nothing else hard-codes these values.

namespace dob::tol {

// Below this b*Ts the discretization uses the two-term b -> 0 limit.
inline constexpr double kSmallFrictionSwitch = 1e-6;

// Default composite-Simpson panel count for the ground-truth plant.
inline constexpr int kDefaultSubsteps = 64;

// Highest Taylor order accepted for a general m-th order observer.
inline constexpr int kMaxObserverOrder = 4;

inline constexpr int kNewtonMaxIterations = 50;
inline constexpr double kNewtonResidual = 1e-14;

// |lambda - 1| below this is the structural marginal inner-loop mode.
inline constexpr double kMarginalModeTolerance = 1e-9;

// Friction-ratio assumption b_m/J_m == b_mn/J_mn, relative.
inline constexpr double kFrictionRatioTolerance = 1e-9;

// Jordan basis of the inner loop is abandoned above this condition number.
inline constexpr double kJordanConditionLimit = 1e12;

// A simulation is declared divergent once any state exceeds this magnitude.
inline constexpr double kDivergenceLimit = 1e6;

// Encoder resolution of the optional quantized measurement model
// (2500 lines, quadrature decoded).
inline constexpr int kDefaultEncoderCounts = 2500 * 4;

}  // namespace dob::tol
