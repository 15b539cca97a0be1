#pragma once

// Exact arithmetic in quadratic rings Z[tau] with tau^2 = p*tau + q, and
// dyadic rationals. Used for cut-and-project windows and for exact
// membership tests of Bragg positions.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "core.hpp"

namespace aperiodica {

/// Ring Z[tau], tau the larger root of x^2 - p x - q.
struct QuadraticRing {
  std::int64_t p = 1;
  std::int64_t q = 1;

  std::int64_t discriminant() const { return p * p + 4 * q; }
  double sqrt_disc() const { return std::sqrt(static_cast<double>(discriminant())); }
  double tau() const { return (static_cast<double>(p) + sqrt_disc()) / 2.0; }
  /// Galois conjugate tau' = p - tau.
  double tau_conj() const { return (static_cast<double>(p) - sqrt_disc()) / 2.0; }

  friend bool operator==(const QuadraticRing&, const QuadraticRing&) = default;
};

inline constexpr QuadraticRing kGolden{1, 1};
inline constexpr QuadraticRing kSilver{2, 1};

/// a + b*tau.
struct QuadInt {
  std::int64_t a = 0;
  std::int64_t b = 0;
  QuadraticRing ring = kGolden;

  double value() const { return static_cast<double>(a) + static_cast<double>(b) * ring.tau(); }
  /// Image under the star map tau -> tau'.
  double star_value() const {
    return static_cast<double>(a) + static_cast<double>(b) * ring.tau_conj();
  }
  QuadInt star() const { return {a + b * ring.p, -b, ring}; }

  friend QuadInt operator+(const QuadInt& x, const QuadInt& y) { return {x.a + y.a, x.b + y.b, x.ring}; }
  friend QuadInt operator-(const QuadInt& x, const QuadInt& y) { return {x.a - y.a, x.b - y.b, x.ring}; }
  friend QuadInt operator-(const QuadInt& x) { return {-x.a, -x.b, x.ring}; }
  friend QuadInt operator*(const QuadInt& x, const QuadInt& y) {
    // (a + b t)(c + d t) = ac + (ad + bc) t + bd t^2,  t^2 = p t + q
    const std::int64_t bd = x.b * y.b;
    return {x.a * y.a + bd * x.ring.q, x.a * y.b + x.b * y.a + bd * x.ring.p, x.ring};
  }
  friend bool operator==(const QuadInt& x, const QuadInt& y) { return x.a == y.a && x.b == y.b; }
};

/// Exact sign of u + v*sqrt(disc).
inline int sign_surd(std::int64_t u, std::int64_t v, std::int64_t disc) {
  const int su = (u > 0) - (u < 0);
  const int sv = (v > 0) - (v < 0);
  if (su == sv) return su;
  if (su == 0) return sv;
  if (sv == 0) return su;
  const __int128 uu = static_cast<__int128>(u) * u;
  const __int128 vv = static_cast<__int128>(v) * v * disc;
  if (uu == vv) return 0;
  return uu > vv ? su : sv;
}

/// Exact sign of the real number a + b*tau.
inline int sign(const QuadInt& x) {
  // a + b (p + s)/2 = (2a + b p + b s)/2
  return sign_surd(2 * x.a + x.b * x.ring.p, x.b, x.ring.discriminant());
}

/// Exact sign of the star image a + b*tau'.
inline int star_sign(const QuadInt& x) {
  return sign_surd(2 * x.a + x.b * x.ring.p, -x.b, x.ring.discriminant());
}

inline bool star_less(const QuadInt& x, const QuadInt& y) { return star_sign(x - y) < 0; }

/// Fourier module of the model sets built on Z[tau]: {(m + n*tau)/sqrt(disc)}.
/// Returns the exact element (m, n) within |m|,|n| <= bound that lies within
/// tol of k, if any.
inline std::optional<QuadInt> fourier_module_member(double k, const QuadraticRing& ring, int bound,
                                                    double tol) {
  const double s = ring.sqrt_disc();
  const double t = ring.tau();
  std::optional<QuadInt> best;
  double best_err = tol;
  for (std::int64_t n = -bound; n <= bound; ++n) {
    const double m_real = k * s - static_cast<double>(n) * t;
    const std::int64_t m = std::llround(m_real);
    if (std::llabs(m) > bound) continue;
    const QuadInt cand{m, n, ring};
    const double err = std::abs(k - cand.value() / s);
    if (err <= best_err) {
      best_err = err;
      best = cand;
    }
  }
  return best;
}

/// Dyadic rational m / 2^j in lowest terms.
struct Dyadic {
  std::int64_t m = 0;
  int j = 0;
  double value() const { return std::ldexp(static_cast<double>(m), -j); }
};

/// Nearest dyadic m/2^jmax to k, reduced; empty if farther than tol.
inline std::optional<Dyadic> dyadic_member(double k, int jmax, double tol) {
  const std::int64_t m = std::llround(std::ldexp(k, jmax));
  Dyadic d{m, jmax};
  if (std::abs(k - d.value()) > tol) return std::nullopt;
  while (d.j > 0 && d.m % 2 == 0) {
    d.m /= 2;
    --d.j;
  }
  return d;
}

inline std::string to_string(const QuadInt& x) {
  return std::to_string(x.a) + (x.b < 0 ? "-" : "+") + std::to_string(std::llabs(x.b)) + "t";
}

/// Parses "a+bt" / "a-bt" / "a" / "bt".
inline QuadInt parse_quadint(const std::string& s, const QuadraticRing& ring) {
  QuadInt r{0, 0, ring};
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = pos + 1;
    while (next < s.size() && s[next] != '+' && s[next] != '-') ++next;
    std::string term = s.substr(pos, next - pos);
    if (!term.empty() && term[0] == '+') term.erase(0, 1);
    if (term.empty()) fail(ErrorCode::parse_error, "bad quadratic integer '" + s + "'");
    if (term.back() == 't') {
      term.pop_back();
      if (term.empty() || term == "-")
        r.b += term.empty() ? 1 : -1;
      else
        r.b += std::stoll(term);
    } else {
      r.a += std::stoll(term);
    }
    pos = next;
  }
  return r;
}

}  // namespace aperiodica
