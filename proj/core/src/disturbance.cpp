#include "dob/disturbance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dob/errors.hpp"

namespace dob {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Half-open/closed activity test for a switch-on instant.
bool switched_on(double t, double t_on, Limit limit) {
  if (limit == Limit::FromLeft) return t > t_on;
  return t >= t_on;
}

bool inside_window(double t, double t_on, double t_off, Limit limit) {
  switch (limit) {
    case Limit::FromRight:
      return t >= t_on && t < t_off;
    case Limit::FromLeft:
      return t > t_on && t <= t_off;
    case Limit::Point:
      break;
  }
  return t >= t_on && t <= t_off;
}

struct SineComponent {
  double coef;
  double rate;
  double phase;
};

// Product-to-sum expansion of one term into pure sines.
std::vector<SineComponent> expand(const ProductTerm& term) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  std::vector<SineComponent> out{{term.amplitude, 0.0, kHalfPi}};
  for (const auto& f : term.factors) {
    const double phase = f.phase + (f.wave == Wave::Cos ? kHalfPi : 0.0);
    std::vector<SineComponent> next;
    next.reserve(out.size() * 2);
    for (const auto& c : out) {
      next.push_back({c.coef / 2.0, c.rate - f.angular_rate,
                      c.phase - phase + kHalfPi});
      next.push_back({-c.coef / 2.0, c.rate + f.angular_rate,
                      c.phase + phase + kHalfPi});
    }
    out = std::move(next);
  }
  return out;
}

double multisine_value(const MultiSineSignal& s, double tau) {
  double sum = 0.0;
  for (const auto& term : s.terms) {
    double v = term.amplitude;
    for (const auto& f : term.factors) {
      const double arg = f.angular_rate * tau + f.phase;
      v *= (f.wave == Wave::Sin) ? std::sin(arg) : std::cos(arg);
    }
    sum += v;
  }
  return sum;
}

double multisine_derivative(const MultiSineSignal& s, double tau, int order) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  double sum = 0.0;
  for (const auto& term : s.terms) {
    for (const auto& c : expand(term)) {
      sum += c.coef * std::pow(c.rate, order) *
             std::sin(c.rate * tau + c.phase + order * kHalfPi);
    }
  }
  return sum;
}

// Index of the sample governing t, honouring the one-sided limit at sample
// instants. Returns -1 before the first sample.
long sample_index(const SampledSignal& s, double t, Limit limit) {
  const double x = (t - s.t0) / s.period;
  const double n = std::round(x);
  if (std::abs(x - n) <= 1e-9 * std::max(1.0, std::abs(x))) {
    const long i = static_cast<long>(n);
    return limit == Limit::FromLeft ? i - 1 : i;
  }
  return static_cast<long>(std::floor(x));
}

double sampled_value(const SampledSignal& s, double t, Limit limit) {
  if (s.samples.empty()) return 0.0;
  const long i = sample_index(s, t, limit);
  if (i < 0) return 0.0;
  const long last = static_cast<long>(s.samples.size()) - 1;
  if (i >= last || s.hold == Hold::ZeroOrder) {
    return s.samples[static_cast<size_t>(std::min(i, last))];
  }
  const double frac = (t - (s.t0 + static_cast<double>(i) * s.period)) / s.period;
  const double a = s.samples[static_cast<size_t>(i)];
  const double b = s.samples[static_cast<size_t>(i + 1)];
  return a + (b - a) * frac;
}

double sampled_slope(const SampledSignal& s, double t, Limit limit) {
  if (s.hold == Hold::ZeroOrder || s.samples.size() < 2) return 0.0;
  const long i = sample_index(s, t, limit);
  const long last = static_cast<long>(s.samples.size()) - 1;
  if (i < 0 || i >= last) return 0.0;
  return (s.samples[static_cast<size_t>(i + 1)] -
          s.samples[static_cast<size_t>(i)]) /
         s.period;
}

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

void validate(const DisturbanceSignal& signal) {
  std::visit(
      Overloaded{
          [](const ZeroSignal&) {},
          [](const ConstantSignal& s) {
            require(std::isfinite(s.level), "constant disturbance level must be finite");
            require(!std::isnan(s.t_on), "constant disturbance t_on must not be NaN");
          },
          [](const RampSignal& s) {
            require(std::isfinite(s.slope) && std::isfinite(s.t_on),
                    "ramp disturbance parameters must be finite");
          },
          [](const SinusoidSignal& s) {
            require(std::isfinite(s.amplitude) && std::isfinite(s.frequency_hz) &&
                        std::isfinite(s.phase),
                    "sinusoid disturbance parameters must be finite");
          },
          [](const MultiSineSignal& s) {
            require(std::isfinite(s.t_on) && std::isfinite(s.t_off),
                    "multisine window must be finite");
            require(s.t_on <= s.t_off, "multisine window requires t_on <= t_off");
            for (const auto& term : s.terms) {
              require(std::isfinite(term.amplitude), "multisine amplitude must be finite");
              for (const auto& f : term.factors) {
                require(std::isfinite(f.angular_rate) && std::isfinite(f.phase),
                        "multisine factor must be finite");
              }
            }
          },
          [](const SampledSignal& s) {
            require(std::isfinite(s.t0), "sampled signal t0 must be finite");
            require(std::isfinite(s.period) && s.period > 0.0,
                    "sampled signal period must be positive");
            for (double v : s.samples) require(std::isfinite(v), "samples must be finite");
          },
      },
      signal);
}

double eval_disturbance(const DisturbanceSignal& signal, double t, Limit limit) {
  return std::visit(
      Overloaded{
          [](const ZeroSignal&) { return 0.0; },
          [&](const ConstantSignal& s) {
            return switched_on(t, s.t_on, limit) ? s.level : 0.0;
          },
          [&](const RampSignal& s) {
            return switched_on(t, s.t_on, limit) ? s.slope * (t - s.t_on) : 0.0;
          },
          [&](const SinusoidSignal& s) {
            return s.amplitude *
                   std::sin(2.0 * std::numbers::pi * s.frequency_hz * t + s.phase);
          },
          [&](const MultiSineSignal& s) {
            return inside_window(t, s.t_on, s.t_off, limit)
                       ? multisine_value(s, t - s.t_on)
                       : 0.0;
          },
          [&](const SampledSignal& s) { return sampled_value(s, t, limit); },
      },
      signal);
}

double eval_disturbance_derivative(const DisturbanceSignal& signal, double t,
                                   int order, Limit limit) {
  if (order < 0) throw ValidationError("derivative order must be non-negative");
  if (order == 0) return eval_disturbance(signal, t, limit);
  return std::visit(
      Overloaded{
          [](const ZeroSignal&) { return 0.0; },
          [](const ConstantSignal&) { return 0.0; },
          [&](const RampSignal& s) {
            return (order == 1 && switched_on(t, s.t_on, limit)) ? s.slope : 0.0;
          },
          [&](const SinusoidSignal& s) {
            const double w = 2.0 * std::numbers::pi * s.frequency_hz;
            return s.amplitude * std::pow(w, order) *
                   std::sin(w * t + s.phase + order * std::numbers::pi / 2.0);
          },
          [&](const MultiSineSignal& s) {
            return inside_window(t, s.t_on, s.t_off, limit)
                       ? multisine_derivative(s, t - s.t_on, order)
                       : 0.0;
          },
          [&](const SampledSignal& s) {
            return order == 1 ? sampled_slope(s, t, limit) : 0.0;
          },
      },
      signal);
}

std::vector<double> breakpoints(const DisturbanceSignal& signal, double t_begin,
                                double t_end) {
  std::vector<double> out;
  auto add = [&](double t) {
    if (t > t_begin && t < t_end) out.push_back(t);
  };
  std::visit(Overloaded{
                 [](const ZeroSignal&) {},
                 [&](const ConstantSignal& s) { add(s.t_on); },
                 [&](const RampSignal& s) { add(s.t_on); },
                 [](const SinusoidSignal&) {},
                 [&](const MultiSineSignal& s) {
                   add(s.t_on);
                   add(s.t_off);
                 },
                 [&](const SampledSignal& s) {
                   if (s.samples.empty()) return;
                   const long first = std::max(
                       0L, static_cast<long>(std::floor((t_begin - s.t0) / s.period)));
                   const long last = std::min(
                       static_cast<long>(s.samples.size()) - 1,
                       static_cast<long>(std::ceil((t_end - s.t0) / s.period)));
                   for (long i = first; i <= last; ++i) {
                     const double ti = s.t0 + static_cast<double>(i) * s.period;
                     // Sample instants that coincide with the interval ends are
                     // handled by the one-sided end-point evaluation.
                     if (std::abs(ti - t_begin) <= 1e-9 * s.period ||
                         std::abs(ti - t_end) <= 1e-9 * s.period)
                       continue;
                     add(ti);
                   }
                 },
             },
             signal);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MultiSineSignal multisine_test_profile() {
  constexpr double pi = std::numbers::pi;
  MultiSineSignal s;
  s.t_on = 3.0;
  s.t_off = 8.0;
  s.terms = {
      {0.35, {{Wave::Sin, 2.5 * pi, 0.0}}},
      {0.47, {{Wave::Cos, 1.7 * pi, 0.0}}},
      {0.56, {{Wave::Sin, 1.5 * pi, 0.0}, {Wave::Cos, 3.5 * pi, 0.0}}},
  };
  return s;
}

SampledSignal sample_and_hold(const DisturbanceSignal& signal, double period,
                              double t_end, Hold hold) {
  if (!(period > 0.0) || !std::isfinite(t_end) || t_end < 0.0) {
    throw ValidationError("sample_and_hold needs period > 0 and t_end >= 0");
  }
  SampledSignal out;
  out.t0 = 0.0;
  out.period = period;
  out.hold = hold;
  const auto n = static_cast<size_t>(std::llround(t_end / period)) + 1;
  out.samples.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    out.samples.push_back(eval_disturbance(signal, static_cast<double>(i) * period));
  }
  return out;
}

std::string describe(const DisturbanceSignal& signal) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const ZeroSignal&) { os << "zero"; },
                 [&](const ConstantSignal& s) {
                   os << "constant(" << s.level << ", t_on=" << s.t_on << ")";
                 },
                 [&](const RampSignal& s) {
                   os << "ramp(" << s.slope << ", t_on=" << s.t_on << ")";
                 },
                 [&](const SinusoidSignal& s) {
                   os << "sinusoid(" << s.amplitude << ", " << s.frequency_hz << " Hz)";
                 },
                 [&](const MultiSineSignal& s) {
                   os << "multisine(" << s.terms.size() << " terms, [" << s.t_on
                      << ", " << s.t_off << "])";
                 },
                 [&](const SampledSignal& s) {
                   os << "sampled(" << s.samples.size() << " samples, dt=" << s.period
                      << ")";
                 },
             },
             signal);
  return os.str();
}

}  // namespace dob
