#pragma once

// Exponential sums Σ w_x exp(-2πi k x) on uniform k grids: an FFTW-backed
// DFT for lattice-supported combs and a Gaussian-gridding NUFFT otherwise.

#include <fftw3.h>

#include <cstring>
#include <memory>
#include <mutex>
#include <vector>

#include "core.hpp"

namespace aperiodica {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  fftw_complex* data = nullptr;
  std::size_t n = 0;
  explicit FftwBuffer(std::size_t size) : data(fftw_alloc_complex(size)), n(size) {
    if (!data) throw std::bad_alloc();
    std::memset(data, 0, sizeof(fftw_complex) * n);
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  cplx get(std::size_t i) const { return {data[i][0], data[i][1]}; }
  void set(std::size_t i, cplx v) {
    data[i][0] = v.real();
    data[i][1] = v.imag();
  }
  void add(std::size_t i, cplx v) {
    data[i][0] += v.real();
    data[i][1] += v.imag();
  }
};

/// In-place transform; sign -1 is exp(-2πi jn/M) (FFTW_FORWARD).
inline void fft_in_place(FftwBuffer& buf, int sign) {
  fftw_plan plan;
  {
    // Only the planner is not thread safe; FFTW_ESTIMATE keeps plans (and
    // therefore results) independent of timing.
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(buf.n), buf.data, buf.data, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace detail

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// F_j = Σ_n a_n exp(-2πi j n / M) for j = 0..M-1, where a is given by
/// integer indices 0 <= n < M and values.
inline std::vector<cplx> dft_from_indices(const std::vector<std::int64_t>& idx, const std::vector<cplx>& vals,
                                          std::size_t M) {
  detail::FftwBuffer buf(M);
  for (std::size_t i = 0; i < idx.size(); ++i) buf.add(static_cast<std::size_t>(idx[i]), vals[i]);
  detail::fft_in_place(buf, -1);
  std::vector<cplx> out(M);
  for (std::size_t j = 0; j < M; ++j) out[j] = buf.get(j);
  return out;
}

/// c_m = Σ_n conj(a_n) a_{n+m} for m = 0..max_lag, computed by one forward
/// and one backward transform of length >= span + max_lag (no wrap-around).
inline std::vector<cplx> lattice_correlation(const std::vector<std::int64_t>& idx, const std::vector<cplx>& vals,
                                             std::int64_t span, std::int64_t max_lag) {
  const std::size_t M = next_pow2(static_cast<std::size_t>(span + max_lag + 1));
  detail::FftwBuffer buf(M);
  for (std::size_t i = 0; i < idx.size(); ++i) buf.add(static_cast<std::size_t>(idx[i]), vals[i]);
  detail::fft_in_place(buf, -1);
  for (std::size_t j = 0; j < M; ++j) buf.set(j, std::norm(buf.get(j)));
  detail::fft_in_place(buf, +1);
  std::vector<cplx> out(static_cast<std::size_t>(max_lag + 1));
  for (std::int64_t m = 0; m <= max_lag; ++m) out[m] = buf.get(static_cast<std::size_t>(m)) / static_cast<double>(M);
  return out;
}

/// Type-1 NUFFT: F(m) = Σ_x c_x exp(-i m θ_x) for m = -M/2 .. M/2-1 (M even),
/// θ_x in [0, 2π). Gaussian gridding with oversampling 2 and 12-point
/// spreading, relative accuracy ~1e-12.
inline std::vector<cplx> nufft_type1(const std::vector<double>& theta, const std::vector<cplx>& c, std::size_t M) {
  constexpr double R = 2.0;
  constexpr int Msp = 12;
  const std::size_t Mr = static_cast<std::size_t>(R) * M;
  const double tau = kPi * Msp / (static_cast<double>(M) * static_cast<double>(M) * R * (R - 0.5));
  const double h = kTwoPi / static_cast<double>(Mr);
  detail::FftwBuffer grid(Mr);
  const auto mr = static_cast<std::int64_t>(Mr);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const auto l0 = static_cast<std::int64_t>(std::floor(theta[i] / h));
    for (std::int64_t l = l0 - Msp + 1; l <= l0 + Msp; ++l) {
      const double d = static_cast<double>(l) * h - theta[i];
      const double g = std::exp(-d * d / (4.0 * tau));
      const std::int64_t w = ((l % mr) + mr) % mr;
      grid.add(static_cast<std::size_t>(w), c[i] * g);
    }
  }
  detail::fft_in_place(grid, -1);
  std::vector<cplx> out(M);
  const double scale = std::sqrt(kPi / tau) / static_cast<double>(Mr);
  const auto half = static_cast<std::int64_t>(M / 2);
  for (std::int64_t m = -half; m < half; ++m) {
    const std::int64_t j = ((m % mr) + mr) % mr;
    out[static_cast<std::size_t>(m + half)] =
        scale * std::exp(static_cast<double>(m) * static_cast<double>(m) * tau) * grid.get(static_cast<std::size_t>(j));
  }
  return out;
}

/// Direct Σ_x w_x exp(-2πi k·x) with compensated accumulation.
template <class Points>
cplx exponential_sum(const Points& points, const std::vector<cplx>& weights, double k, std::size_t first,
                     std::size_t last) {
  CompensatedSum<cplx> acc;
  for (std::size_t i = first; i < last; ++i) acc.add(weights[i] * std::polar(1.0, -kTwoPi * k * points[i][0]));
  return acc.value();
}

/// S_j = Σ_x w_x exp(-2πi (k0 + j dk) x), j = 0..J-1, J even, via the NUFFT.
inline std::vector<cplx> uniform_grid_sums(const std::vector<double>& x, const std::vector<cplx>& w, double k0,
                                           double dk, std::size_t J) {
  std::vector<double> theta(x.size());
  std::vector<cplx> c(x.size());
  const double half = static_cast<double>(J / 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = dk * x[i];
    f -= std::floor(f);
    theta[i] = kTwoPi * f;
    if (theta[i] >= kTwoPi) theta[i] = 0.0;
    // exp(-i j θ) = exp(-i m θ) exp(-i (J/2) θ) with m = j - J/2.
    double g = k0 * x[i] + half * f;
    g -= std::floor(g);
    c[i] = w[i] * std::polar(1.0, -kTwoPi * g);
  }
  return nufft_type1(theta, c, J);
}

}  // namespace aperiodica
