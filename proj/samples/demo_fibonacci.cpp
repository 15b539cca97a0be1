// Fibonacci chain: Bragg peaks, their labels in Z[tau]/sqrt(5), and the
// purity of the diffraction.

#include <cstdio>

#include "aperiodica/diffraction.hpp"
#include "aperiodica/generators.hpp"
#include "aperiodica/quadratic.hpp"

using namespace aperiodica;

int main() {
  const Generator fib = fibonacci_model_set();
  const VanHoveSequence<1> seq = default_van_hove<1>(100.0, 2.0, 7);
  PeakScanOptions opt;
  opt.k_lo = 0.05;
  opt.k_hi = 3.0;
  DiffractionSpectrum sp = peak_scan(fib, seq, opt);

  const Box<1>& B = seq.boxes.back();
  const auto gamma = autocorrelation<1>(fib.produce(interval(-10.0, B.hi[0] + 10.0)), B, 0.0, 4.0);
  opt.k_lo = -3.0;
  DiffractionSpectrum full = peak_scan(fib, seq, opt);
  purity(gamma, full, tent1(0.0, 0.5));

  std::printf("density %.6f, %zu atoms in (0.05, 3], purity %.4f\n", fib.density(), sp.atoms.size(), full.purity);
  std::printf("%10s %12s %10s   k = (a + b tau) / sqrt 5\n", "k", "intensity", "residual");
  for (std::size_t i = 0; i < sp.atoms.size() && i < 12; ++i) {
    const Atom& a = sp.atoms[i];
    const auto q = fourier_module_member(a.k, kGolden, 40, 1e-4);
    if (q)
      std::printf("%10.6f %12.4e %10.2e   a = %3lld, b = %3lld\n", a.k, a.intensity, a.residual,
                  static_cast<long long>(q->a), static_cast<long long>(q->b));
    else
      std::printf("%10.6f %12.4e %10.2e   (no label)\n", a.k, a.intensity, a.residual);
  }
}
