#pragma once

#include <cmath>
#include <cstddef>

#include <Eigen/Core>

namespace droplock {

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // sample (n - 1) standard deviation
    Eigen::Index count = 0;
};

template <typename Derived>
MeanStd mean_std(const Eigen::DenseBase<Derived>& x) {
    MeanStd r;
    r.count = x.size();
    if (r.count == 0) return r;
    r.mean = static_cast<double>(x.derived().mean());
    if (r.count > 1) {
        const double ss = (x.derived().array() - r.mean).square().sum();
        r.stddev = std::sqrt(ss / static_cast<double>(r.count - 1));
    }
    return r;
}

template <typename Derived, typename MaskDerived>
MeanStd masked_mean_std(const Eigen::DenseBase<Derived>& x, const Eigen::DenseBase<MaskDerived>& mask) {
    MeanStd r;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (mask(i)) {
            sum += x(i);
            ++r.count;
        }
    }
    if (r.count == 0) return r;
    r.mean = sum / static_cast<double>(r.count);
    if (r.count > 1) {
        double ss = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (mask(i)) ss += (x(i) - r.mean) * (x(i) - r.mean);
        r.stddev = std::sqrt(ss / static_cast<double>(r.count - 1));
    }
    return r;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Ordinary least-squares y = slope * x + intercept.
template <typename DerivedX, typename DerivedY>
LineFit fit_line(const Eigen::DenseBase<DerivedX>& x, const Eigen::DenseBase<DerivedY>& y) {
    const double mx = x.derived().mean();
    const double my = y.derived().mean();
    const auto dx = (x.derived().array() - mx).eval();
    const double sxx = dx.square().sum();
    const double sxy = (dx * (y.derived().array() - my)).sum();
    LineFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    return f;
}

template <typename Derived>
double excess_kurtosis(const Eigen::DenseBase<Derived>& x) {
    const double m = x.derived().mean();
    const auto d = (x.derived().array() - m).eval();
    const double m2 = d.square().mean();
    const double m4 = d.square().square().mean();
    return m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
}

}  // namespace droplock
