#pragma once

// Shared vocabulary: vectors, boxes, group kinds, errors, summation and
// deterministic parallel helpers.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

namespace aperiodica {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Absolute resolution below which two points are considered coincident.
inline constexpr double kCoincidence = 1e-12;

// ---------------------------------------------------------------------------
// Errors

enum class ErrorCode {
  invalid_argument,
  window_too_small,
  truncated_support,
  degenerate_window,
  epsilon_too_large,
  k_outside_window,
  empty_basis,
  non_flc_with_zero_binning,
  sigma_not_normalized,
  range_exceeded,
  grid_too_coarse,
  zero_denominator,
  not_pure_point,
  parse_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::window_too_small: return "WindowTooSmall";
    case ErrorCode::truncated_support: return "TruncatedSupport";
    case ErrorCode::degenerate_window: return "DegenerateWindow";
    case ErrorCode::epsilon_too_large: return "EpsilonTooLarge";
    case ErrorCode::k_outside_window: return "KOutsideWindow";
    case ErrorCode::empty_basis: return "EmptyBasis";
    case ErrorCode::non_flc_with_zero_binning: return "NonFLCWithZeroBinning";
    case ErrorCode::sigma_not_normalized: return "SigmaNotNormalized";
    case ErrorCode::range_exceeded: return "RangeExceeded";
    case ErrorCode::grid_too_coarse: return "GridTooCoarse";
    case ErrorCode::zero_denominator: return "ZeroDenominator";
    case ErrorCode::not_pure_point: return "NotPurePoint";
    case ErrorCode::parse_error: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

/// A value that may have been computed from truncated data.
template <class T>
struct Evaluated {
  T value{};
  bool truncated = false;
};

// ---------------------------------------------------------------------------
// Groups

enum class GroupKind { real_line, real_plane, integer_line, integer_plane };

struct GroupSpec {
  GroupKind kind = GroupKind::real_line;

  int dim() const {
    return (kind == GroupKind::real_line || kind == GroupKind::integer_line) ? 1 : 2;
  }
  bool discrete() const {
    return kind == GroupKind::integer_line || kind == GroupKind::integer_plane;
  }
  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;
};

inline GroupSpec real_group(int d) { return {d == 1 ? GroupKind::real_line : GroupKind::real_plane}; }
inline GroupSpec integer_group(int d) {
  return {d == 1 ? GroupKind::integer_line : GroupKind::integer_plane};
}

inline std::string to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::real_line: return "real-line";
    case GroupKind::real_plane: return "real-plane";
    case GroupKind::integer_line: return "integer-line";
    case GroupKind::integer_plane: return "integer-plane";
  }
  return "real-line";
}

inline GroupKind group_kind_from_string(const std::string& s) {
  if (s == "real-line") return GroupKind::real_line;
  if (s == "real-plane") return GroupKind::real_plane;
  if (s == "integer-line") return GroupKind::integer_line;
  if (s == "integer-plane") return GroupKind::integer_plane;
  fail(ErrorCode::parse_error, "unknown group kind '" + s + "'");
}

// ---------------------------------------------------------------------------
// Vectors

template <int D>
using Vec = std::array<double, D>;

template <std::size_t D>
std::array<double, D> operator+(const std::array<double, D>& a, const std::array<double, D>& b) {
  std::array<double, D> r;
  for (std::size_t i = 0; i < D; ++i) r[i] = a[i] + b[i];
  return r;
}

template <std::size_t D>
std::array<double, D> operator-(const std::array<double, D>& a, const std::array<double, D>& b) {
  std::array<double, D> r;
  for (std::size_t i = 0; i < D; ++i) r[i] = a[i] - b[i];
  return r;
}

template <std::size_t D>
std::array<double, D> operator-(const std::array<double, D>& a) {
  std::array<double, D> r;
  for (std::size_t i = 0; i < D; ++i) r[i] = -a[i];
  return r;
}

template <std::size_t D>
std::array<double, D> operator*(double s, const std::array<double, D>& a) {
  std::array<double, D> r;
  for (std::size_t i = 0; i < D; ++i) r[i] = s * a[i];
  return r;
}

template <std::size_t D>
double dot(const std::array<double, D>& a, const std::array<double, D>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t D>
double max_norm(const std::array<double, D>& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < D; ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

template <int D>
std::array<double, D> filled(double v) {
  std::array<double, D> r;
  r.fill(v);
  return r;
}

/// Exact lexicographic order.
template <std::size_t D>
bool lex_less(const std::array<double, D>& a, const std::array<double, D>& b) {
  for (std::size_t i = 0; i < D; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

template <std::size_t D>
bool nearly_equal(const std::array<double, D>& a, const std::array<double, D>& b, double tol) {
  for (std::size_t i = 0; i < D; ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Boxes
//
// One axis-aligned box type; the caller decides whether it is read as
// half-open [lo, hi), open (lo, hi) or closed [lo, hi].

template <int D>
struct Box {
  Vec<D> lo{};
  Vec<D> hi{};

  bool empty() const {
    for (int i = 0; i < D; ++i)
      if (!(lo[i] < hi[i])) return true;
    return false;
  }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < D; ++i) v *= std::max(0.0, hi[i] - lo[i]);
    return v;
  }

  double diameter() const {
    double s = 0.0;
    for (int i = 0; i < D; ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
    return std::sqrt(s);
  }

  Vec<D> center() const { return 0.5 * (lo + hi); }

  bool contains_half_open(const Vec<D>& x) const {
    for (int i = 0; i < D; ++i)
      if (!(x[i] >= lo[i] && x[i] < hi[i])) return false;
    return true;
  }
  bool contains_open(const Vec<D>& x) const {
    for (int i = 0; i < D; ++i)
      if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
    return true;
  }
  bool contains_closed(const Vec<D>& x) const {
    for (int i = 0; i < D; ++i)
      if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
    return true;
  }
  bool contains_box(const Box& b) const {
    for (int i = 0; i < D; ++i)
      if (b.lo[i] < lo[i] || b.hi[i] > hi[i]) return false;
    return true;
  }

  Box translated(const Vec<D>& t) const { return {lo + t, hi + t}; }
  Box negated() const { return {-hi, -lo}; }
  Box inflated(const Vec<D>& r) const { return {lo - r, hi + r}; }

  friend bool operator==(const Box&, const Box&) = default;
};

template <int D>
Box<D> intersect(const Box<D>& a, const Box<D>& b) {
  Box<D> r;
  for (int i = 0; i < D; ++i) {
    r.lo[i] = std::max(a.lo[i], b.lo[i]);
    r.hi[i] = std::min(a.hi[i], b.hi[i]);
  }
  return r;
}

/// Minkowski sum a + b.
template <int D>
Box<D> minkowski_sum(const Box<D>& a, const Box<D>& b) {
  return {a.lo + b.lo, a.hi + b.hi};
}

/// Erosion a ⊖ b = {t : t + b ⊆ a}.
template <int D>
Box<D> erosion(const Box<D>& a, const Box<D>& b) {
  return {a.lo - b.lo, a.hi - b.hi};
}

template <int D>
Box<D> cube(double lo, double hi) {
  return {filled<D>(lo), filled<D>(hi)};
}

inline Box<1> interval(double lo, double hi) { return {{lo}, {hi}}; }

/// Haar volume of a half-open box: Lebesgue for real groups, counting
/// measure of the integer points for integer groups.
template <int D>
double haar_volume(const Box<D>& b, const GroupSpec& g) {
  if (!g.discrete()) return b.volume();
  double v = 1.0;
  for (int i = 0; i < D; ++i) v *= std::max(0.0, std::ceil(b.hi[i]) - std::ceil(b.lo[i]));
  return v;
}

// ---------------------------------------------------------------------------
// Summation

/// Neumaier compensated accumulator.
template <class T>
class CompensatedSum {
 public:
  void add(T x) {
    if constexpr (std::is_same_v<T, cplx>) {
      re_.add(x.real());
      im_.add(x.imag());
    } else {
      T t = sum_ + x;
      if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
      else
        comp_ += (x - t) + sum_;
      sum_ = t;
    }
  }
  T value() const {
    if constexpr (std::is_same_v<T, cplx>)
      return {re_.value(), im_.value()};
    else
      return sum_ + comp_;
  }

 private:
  struct Empty {};
  using Part = std::conditional_t<std::is_same_v<T, cplx>, CompensatedSum<double>, Empty>;
  T sum_{};
  T comp_{};
  [[no_unique_address]] Part re_{};
  [[no_unique_address]] Part im_{};
};

// ---------------------------------------------------------------------------
// Quadrature

/// Gauss-Legendre nodes/weights on [-1, 1].
template <int N>
struct GaussLegendre;

template <>
struct GaussLegendre<4> {
  static constexpr std::array<double, 4> x{-0.8611363115940526, -0.3399810435848563,
                                           0.3399810435848563, 0.8611363115940526};
  static constexpr std::array<double, 4> w{0.3478548451374538, 0.6521451548625461,
                                           0.6521451548625461, 0.3478548451374538};
};

template <>
struct GaussLegendre<8> {
  static constexpr std::array<double, 8> x{
      -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
      0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
  static constexpr std::array<double, 8> w{
      0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
      0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
};

/// Integrates f over [a, b] by splitting at the sorted breakpoints and then
/// into pieces no longer than max_step, applying N-point Gauss-Legendre.
template <int N, class F>
auto integrate_piecewise(F&& f, double a, double b, std::vector<double> breaks, double max_step) {
  using R = decltype(f(a));
  CompensatedSum<R> acc;
  if (!(b > a)) return R{};
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double prev = a;
  for (double x : breaks) {
    if (x <= prev) continue;
    if (x > b) x = b;
    const double len = x - prev;
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / max_step)));
    const double h = len / pieces;
    for (int p = 0; p < pieces; ++p) {
      const double lo = prev + p * h;
      const double mid = lo + 0.5 * h;
      R piece{};
      for (int i = 0; i < N; ++i) piece += GaussLegendre<N>::w[i] * f(mid + 0.5 * h * GaussLegendre<N>::x[i]);
      acc.add(0.5 * h * piece);
    }
    prev = x;
    if (prev >= b) break;
  }
  return acc.value();
}

// ---------------------------------------------------------------------------
// Parallelism

/// Worker count from APERIODICA_WORKERS, default 1.
inline int default_workers() {
  if (const char* env = std::getenv("APERIODICA_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

/// Runs fn(block_index, begin, end) over `blocks` contiguous blocks of
/// [0, n). Block boundaries depend only on `blocks`, never on timing.
template <class F>
void parallel_blocks(std::size_t n, int blocks, F&& fn) {
  blocks = std::max(1, blocks);
  if (blocks == 1 || n < 2) {
    fn(0, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(blocks);
  for (int b = 0; b < blocks; ++b) {
    const std::size_t begin = n * b / blocks;
    const std::size_t end = n * (b + 1) / blocks;
    threads.emplace_back([&fn, b, begin, end] { fn(b, begin, end); });
  }
  for (auto& t : threads) t.join();
}

/// Independent per-item evaluation, results in item order.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int workers, F&& fn) {
  std::vector<T> out(n);
  parallel_blocks(n, workers, [&](int, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = fn(i);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Misc

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// splitmix64, used as a counter-based hash for seeded per-site randomness.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1) determined by (seed, index).
inline double hashed_uniform(std::uint64_t seed, std::int64_t index) {
  const std::uint64_t h = splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(index));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - kPi * kPi * x * x / 6.0;
  return std::sin(kPi * x) / (kPi * x);
}

}  // namespace aperiodica
