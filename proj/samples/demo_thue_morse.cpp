// Thue–Morse ±1 weights: the largest structure-factor value shrinks as the
// box grows, so no Bragg peak survives and the purity is zero.

#include <cstdio>

#include "aperiodica/diffraction.hpp"
#include "aperiodica/generators.hpp"

using namespace aperiodica;

int main() {
  const Generator tm = thue_morse();
  std::printf("%8s %14s %8s\n", "n_max", "max I_B/|B|", "atoms");
  double prev = 0.0;
  for (int n = 3; n <= 8; ++n) {
    PeakScanOptions opt;
    opt.k_lo = -1.0;
    opt.k_hi = 1.0;
    const DiffractionSpectrum sp = peak_scan(tm, default_van_hove<1>(100.0, 2.0, n), opt);
    std::printf("%8d %14.6f %8zu", n, sp.max_scan_intensity, sp.atoms.size());
    if (prev > 0.0) std::printf("   ratio %.3f", sp.max_scan_intensity / prev);
    std::printf("\n");
    prev = sp.max_scan_intensity;
  }
  // a ratio near 2^-0.415 per doubling: the peak heights scale like |B|^-0.415

  const VanHoveSequence<1> seq = default_van_hove<1>(100.0, 2.0, 6);
  const Box<1>& B = seq.boxes.back();
  const auto gamma = autocorrelation<1>(tm.produce(interval(-10.0, B.hi[0] + 10.0)), B, 0.0, 4.0);
  PeakScanOptions opt;
  opt.k_lo = -3.0;
  opt.k_hi = 3.0;
  DiffractionSpectrum sp = peak_scan(tm, seq, opt);
  std::printf("eta(0) %.4f, eta(1) %.4f, purity %.4f\n", gamma.at({0.0}).real(), gamma.at({1.0}).real(),
              purity(gamma, sp, tent1(0.0, 0.5)));
}
