#include "droplock/fourier.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>

#include <unsupported/Eigen/FFT>

namespace droplock {

namespace {

constexpr long kDirectPrimeLimit = 97;

struct BluesteinPlan {
    Eigen::Index n = 0;
    Eigen::Index m = 0;            // power-of-two convolution length >= 2n - 1
    Eigen::VectorXcd chirp;        // exp(-i pi k^2 / n), k < n
    Eigen::VectorXcd kernel_fft;   // FFT of the conjugate chirp, wrapped
};

Eigen::FFT<double>& fft_engine() {
    thread_local Eigen::FFT<double> engine;
    return engine;
}

const BluesteinPlan& bluestein_plan(Eigen::Index n) {
    thread_local std::unordered_map<Eigen::Index, BluesteinPlan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    BluesteinPlan plan;
    plan.n = n;
    plan.m = 1;
    while (plan.m < 2 * n - 1) plan.m <<= 1;
    plan.chirp.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small and exact.
        const auto k2 = static_cast<long long>(k) * k % (2LL * n);
        const double angle = std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
        plan.chirp(k) = std::polar(1.0, -angle);
    }
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(plan.m);
    b(0) = std::conj(plan.chirp(0));
    for (Eigen::Index k = 1; k < n; ++k) {
        b(k) = std::conj(plan.chirp(k));
        b(plan.m - k) = std::conj(plan.chirp(k));
    }
    fft_engine().fwd(plan.kernel_fft, b);
    return cache.emplace(n, std::move(plan)).first->second;
}

Eigen::VectorXcd bluestein(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const BluesteinPlan& plan = bluestein_plan(x.size());
    Eigen::VectorXcd a = Eigen::VectorXcd::Zero(plan.m);
    a.head(plan.n) = x.cast<std::complex<double>>().cwiseProduct(plan.chirp);
    Eigen::VectorXcd fa;
    fft_engine().fwd(fa, a);
    fa = fa.cwiseProduct(plan.kernel_fft);
    Eigen::VectorXcd conv;
    fft_engine().inv(conv, fa);
    const Eigen::Index half = plan.n / 2 + 1;
    return conv.head(half).cwiseProduct(plan.chirp.head(half));
}

}  // namespace

long largest_prime_factor(long n) {
    long largest = 1;
    for (long p = 2; p * p <= n; ++p) {
        while (n % p == 0) {
            largest = p;
            n /= p;
        }
    }
    return n > 1 ? n : largest;
}

Eigen::VectorXcd real_dft(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const Eigen::Index n = x.size();
    if (n == 0) return {};
    if (largest_prime_factor(static_cast<long>(n)) > kDirectPrimeLimit) return bluestein(x);
    Eigen::VectorXd in = x;
    Eigen::VectorXcd full;
    fft_engine().fwd(full, in);
    return full.head(n / 2 + 1);
}

}  // namespace droplock
