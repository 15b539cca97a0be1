#pragma once

// Compactly supported continuous bumps with closed-form Fourier transforms.
// In d = 2 a test function is the product of identical-shape profiles.

#include <complex>
#include <string>
#include <vector>

#include "core.hpp"

namespace aperiodica {

enum class Shape { tent, raised_cosine, box_mollified_tent };

inline std::string to_string(Shape s) {
  switch (s) {
    case Shape::tent: return "tent";
    case Shape::raised_cosine: return "raised-cosine";
    case Shape::box_mollified_tent: return "box-mollified-tent";
  }
  return "tent";
}

inline Shape shape_from_string(const std::string& s) {
  if (s == "tent") return Shape::tent;
  if (s == "raised-cosine" || s == "cosine") return Shape::raised_cosine;
  if (s == "box-mollified-tent" || s == "trapezoid") return Shape::box_mollified_tent;
  fail(ErrorCode::parse_error, "unknown test function shape '" + s + "'");
}

/// One-dimensional profile centred at 0 with peak value 1.
///
/// box_mollified_tent is the trapezoid obtained by convolving two boxes:
/// value 1 on [-p, p], linear ramps to 0 at +-h, with p = plateau * h.
struct Profile {
  Shape shape = Shape::tent;
  double halfwidth = 1.0;
  double plateau = 0.5;

  double plateau_halfwidth() const { return shape == Shape::box_mollified_tent ? plateau * halfwidth : 0.0; }

  double operator()(double u) const {
    const double a = std::abs(u);
    if (a >= halfwidth) return 0.0;
    switch (shape) {
      case Shape::tent: return 1.0 - a / halfwidth;
      case Shape::raised_cosine: return 0.5 * (1.0 + std::cos(kPi * a / halfwidth));
      case Shape::box_mollified_tent: {
        const double p = plateau_halfwidth();
        return a <= p ? 1.0 : (halfwidth - a) / (halfwidth - p);
      }
    }
    return 0.0;
  }

  /// ∫ profile(u) exp(-2πiku) du (real because the profile is even).
  double fourier(double k) const {
    const double h = halfwidth;
    switch (shape) {
      case Shape::tent: {
        const double s = sinc(h * k);
        return h * s * s;
      }
      case Shape::raised_cosine:
        return h * sinc(2.0 * h * k) + 0.5 * h * (sinc(2.0 * h * k - 1.0) + sinc(2.0 * h * k + 1.0));
      case Shape::box_mollified_tent: {
        const double p = plateau_halfwidth();
        return (h + p) * sinc((h - p) * k) * sinc((h + p) * k);
      }
    }
    return 0.0;
  }

  double integral() const {
    switch (shape) {
      case Shape::tent: return halfwidth;
      case Shape::raised_cosine: return halfwidth;
      case Shape::box_mollified_tent: return halfwidth + plateau_halfwidth();
    }
    return 0.0;
  }

  double l2_norm_sq() const {
    switch (shape) {
      case Shape::tent: return 2.0 * halfwidth / 3.0;
      case Shape::raised_cosine: return 0.75 * halfwidth;
      case Shape::box_mollified_tent: {
        const double p = plateau_halfwidth();
        return 2.0 * p + 2.0 * (halfwidth - p) / 3.0;
      }
    }
    return 0.0;
  }

  double lipschitz() const {
    switch (shape) {
      case Shape::tent: return 1.0 / halfwidth;
      case Shape::raised_cosine: return kPi / (2.0 * halfwidth);
      case Shape::box_mollified_tent: return 1.0 / (halfwidth - plateau_halfwidth());
    }
    return 0.0;
  }

  /// Points where the profile fails to be smooth (plus the centre).
  std::vector<double> breakpoints() const {
    const double h = halfwidth;
    if (shape == Shape::box_mollified_tent) {
      const double p = plateau_halfwidth();
      return {-h, -p, p, h};
    }
    return {-h, 0.0, h};
  }

  /// Largest step for which 8-point Gauss-Legendre stays at round-off
  /// level on smooth pieces.
  double quadrature_step() const { return shape == Shape::raised_cosine ? halfwidth / 4.0 : 2.0 * halfwidth; }
};

template <int D>
struct TestFunction {
  Shape shape = Shape::tent;
  Vec<D> center{};
  Vec<D> halfwidth = filled<D>(1.0);
  cplx amplitude{1.0, 0.0};
  double plateau = 0.5;

  Profile profile(int axis) const { return {shape, halfwidth[axis], plateau}; }

  cplx operator()(const Vec<D>& x) const {
    double v = 1.0;
    for (int i = 0; i < D; ++i) {
      v *= profile(i)(x[i] - center[i]);
      if (v == 0.0) return {0.0, 0.0};
    }
    return amplitude * v;
  }

  /// Closed support.
  Box<D> support() const { return {center - halfwidth, center + halfwidth}; }

  double sup_norm() const { return std::abs(amplitude); }

  /// φ̂(k) = ∫ φ(x) exp(-2πi k·x) dx on R^d, or the corresponding sum over
  /// the integer points on Z^d.
  cplx fourier(const Vec<D>& k, const GroupSpec& g = {}) const {
    cplx r = amplitude;
    for (int i = 0; i < D; ++i) {
      const Profile p = profile(i);
      if (!g.discrete()) {
        r *= p.fourier(k[i]) * std::polar(1.0, -kTwoPi * k[i] * center[i]);
      } else {
        cplx s{0.0, 0.0};
        const auto lo = static_cast<long long>(std::ceil(center[i] - halfwidth[i]));
        const auto hi = static_cast<long long>(std::floor(center[i] + halfwidth[i]));
        for (long long n = lo; n <= hi; ++n)
          s += p(static_cast<double>(n) - center[i]) * std::polar(1.0, -kTwoPi * k[i] * static_cast<double>(n));
        r *= s;
      }
    }
    return r;
  }

  cplx integral(const GroupSpec& g = {}) const { return fourier(Vec<D>{}, g); }

  double l2_norm_sq(const GroupSpec& g = {}) const {
    double v = std::norm(amplitude);
    for (int i = 0; i < D; ++i) {
      const Profile p = profile(i);
      if (!g.discrete()) {
        v *= p.l2_norm_sq();
      } else {
        double s = 0.0;
        const auto lo = static_cast<long long>(std::ceil(center[i] - halfwidth[i]));
        const auto hi = static_cast<long long>(std::floor(center[i] + halfwidth[i]));
        for (long long n = lo; n <= hi; ++n) s += std::pow(p(static_cast<double>(n) - center[i]), 2);
        v *= s;
      }
    }
    return v;
  }

  double lipschitz() const {
    double l = 0.0;
    for (int i = 0; i < D; ++i) l = std::max(l, profile(i).lipschitz());
    return std::abs(amplitude) * l;
  }

  /// φ̃(x) = conj(φ(-x)).
  TestFunction conj_reflected() const {
    TestFunction r = *this;
    r.center = -center;
    r.amplitude = std::conj(amplitude);
    return r;
  }

  /// β_t φ = δ_t * φ, i.e. x ↦ φ(x - t).
  TestFunction translated(const Vec<D>& t) const {
    TestFunction r = *this;
    r.center = center + t;
    return r;
  }

  TestFunction scaled(cplx s) const {
    TestFunction r = *this;
    r.amplitude *= s;
    return r;
  }
};

template <int D>
TestFunction<D> tent(const Vec<D>& center, double halfwidth, cplx amplitude = 1.0) {
  return {Shape::tent, center, filled<D>(halfwidth), amplitude, 0.5};
}

inline TestFunction<1> tent1(double center, double halfwidth, cplx amplitude = 1.0) {
  return tent<1>({center}, halfwidth, amplitude);
}

/// Normalizes the amplitude so that ∫φ = 1.
template <int D>
TestFunction<D> normalized(TestFunction<D> f, const GroupSpec& g = {}) {
  const cplx integral = f.integral(g);
  if (std::abs(integral) == 0.0) fail(ErrorCode::invalid_argument, "test function has zero integral");
  f.amplitude /= integral;
  return f;
}

/// (φ̃ * ψ)(s) = ∫ conj(φ(u)) ψ(s + u) du (a sum over Z^d for integer groups).
template <int D>
cplx cross_correlation(const TestFunction<D>& phi, const TestFunction<D>& psi, const Vec<D>& s,
                       const GroupSpec& g = {}) {
  cplx r = std::conj(phi.amplitude) * psi.amplitude;
  for (int i = 0; i < D; ++i) {
    const Profile p = phi.profile(i);
    const Profile q = psi.profile(i);
    const double cp = phi.center[i];
    const double cq = psi.center[i] - s[i];
    const double lo = std::max(cp - p.halfwidth, cq - q.halfwidth);
    const double hi = std::min(cp + p.halfwidth, cq + q.halfwidth);
    if (!(hi > lo)) return {0.0, 0.0};
    double axis = 0.0;
    if (!g.discrete()) {
      std::vector<double> breaks;
      for (double b : p.breakpoints()) breaks.push_back(b + cp);
      for (double b : q.breakpoints()) breaks.push_back(b + cq);
      auto f = [&](double u) { return p(u - cp) * q(u - cq); };
      axis = integrate_piecewise<8>(f, lo, hi, std::move(breaks),
                                    std::min(p.quadrature_step(), q.quadrature_step()));
    } else {
      for (double u = std::ceil(lo); u <= hi; u += 1.0) axis += p(u - cp) * q(u - cq);
    }
    r *= axis;
    if (axis == 0.0) return {0.0, 0.0};
  }
  return r;
}

/// Parses "shape:halfwidth[@center]" (1-D), e.g. "tent:0.5" or "raised-cosine:1@0.25".
inline TestFunction<1> parse_test_function(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) fail(ErrorCode::parse_error, "test function needs shape:halfwidth, got '" + spec + "'");
  TestFunction<1> f;
  f.shape = shape_from_string(spec.substr(0, colon));
  std::string rest = spec.substr(colon + 1);
  const auto at = rest.find('@');
  try {
    f.halfwidth = {std::stod(rest.substr(0, at))};
    if (at != std::string::npos) f.center = {std::stod(rest.substr(at + 1))};
  } catch (const std::exception&) {
    fail(ErrorCode::parse_error, "bad test function '" + spec + "'");
  }
  if (!(f.halfwidth[0] > 0.0)) fail(ErrorCode::parse_error, "halfwidth must be positive in '" + spec + "'");
  return f;
}

inline std::string describe(const TestFunction<1>& f) {
  std::string s = to_string(f.shape) + ":" + format_double(f.halfwidth[0]);
  if (f.center[0] != 0.0) s += "@" + format_double(f.center[0]);
  return s;
}

}  // namespace aperiodica
