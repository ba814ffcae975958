#pragma once

#include <complex>

#include <Eigen/Core>

namespace droplock {

// Forward DFT of a real sequence, bins 0 .. n/2 (unnormalized, e^{-2 pi i jk/n}).
// Sizes whose largest prime factor is small go straight to a mixed-radix FFT;
// anything else is routed through Bluestein's chirp-z so every length runs in
// O(n log n). Plans are cached per thread.
Eigen::VectorXcd real_dft(const Eigen::Ref<const Eigen::VectorXd>& x);

// Largest prime factor of n (n >= 1; returns 1 for n == 1).
long largest_prime_factor(long n);

}  // namespace droplock
