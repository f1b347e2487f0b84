#pragma once

#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace dob {

inline constexpr double kNever = -std::numeric_limits<double>::infinity();

struct ZeroSignal {};

/// level for t >= t_on, 0 before.
struct ConstantSignal {
  double level = 0.0;
  double t_on = kNever;
};

/// slope * (t - t_on) for t >= t_on, 0 before.
struct RampSignal {
  double slope = 0.0;
  double t_on = 0.0;
};

/// amplitude * sin(2 pi f t + phase), always on.
struct SinusoidSignal {
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double phase = 0.0;
};

enum class Wave { Sin, Cos };

/// wave(angular_rate * tau + phase), tau measured from the window start.
struct WaveFactor {
  Wave wave = Wave::Sin;
  double angular_rate = 0.0;  // rad/s
  double phase = 0.0;
};

struct ProductTerm {
  double amplitude = 0.0;
  std::vector<WaveFactor> factors;
};

/// Sum of products of sinusoids on the closed window [t_on, t_off], zero
/// outside it.
struct MultiSineSignal {
  std::vector<ProductTerm> terms;
  double t_on = 0.0;
  double t_off = 0.0;
};

enum class Hold { ZeroOrder, Linear };

/// samples[i] is the value at t0 + i * period. Zero before t0, the last
/// sample is held after the series ends.
struct SampledSignal {
  double t0 = 0.0;
  double period = 1.0;
  std::vector<double> samples;
  Hold hold = Hold::ZeroOrder;
};

using DisturbanceSignal =
    std::variant<ZeroSignal, ConstantSignal, RampSignal, SinusoidSignal,
                 MultiSineSignal, SampledSignal>;

/// Which value to take at a discontinuity. Point uses closed windows.
enum class Limit { Point, FromRight, FromLeft };

/// Throws ValidationError on non-finite parameters, t_on > t_off, or a
/// non-positive sample period.
void validate(const DisturbanceSignal& signal);

double eval_disturbance(const DisturbanceSignal& signal, double t,
                        Limit limit = Limit::Point);

/// order-th time derivative (order 0 is the value). Piecewise signals report
/// the derivative of the active piece.
double eval_disturbance_derivative(const DisturbanceSignal& signal, double t,
                                   int order, Limit limit = Limit::Point);

/// Discontinuities and kinks strictly inside (t_begin, t_end), ascending.
std::vector<double> breakpoints(const DisturbanceSignal& signal, double t_begin,
                                double t_end);

/// The three-tone regulation test torque used throughout the experiments:
///   0.35 sin(2.5 pi tau) + 0.47 cos(1.7 pi tau)
///     + 0.56 sin(1.5 pi tau) cos(3.5 pi tau),   tau = t - 3,
/// active on [3, 8] s.
MultiSineSignal multisine_test_profile();

/// Samples `signal` every `period` seconds on [0, t_end] and returns the held
/// series, i.e. what a digitally commanded load motor applies.
SampledSignal sample_and_hold(const DisturbanceSignal& signal, double period,
                              double t_end, Hold hold = Hold::ZeroOrder);

std::string describe(const DisturbanceSignal& signal);

}  // namespace dob
