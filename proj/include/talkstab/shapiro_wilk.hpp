#pragma once

// Shapiro-Wilk normality test, Royston's AS R94 approximation: weights from
// Blom normal order-statistic scores with polynomial endpoint corrections,
// p-value from a transformed-normal fit (exact arcsine form at n = 3).
// Valid for 3 <= n <= 5000.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "talkstab/stats.hpp"

namespace talkstab {

struct ShapiroWilkResult {
    double w;
    double p;
};

namespace detail {

inline double royston_poly(const double* c, int n, double x) {
    double r = c[n - 1];
    for (int i = n - 2; i >= 0; --i) r = r * x + c[i];
    return r;
}

} // namespace detail

inline ShapiroWilkResult shapiro_wilk(std::span<const double> samples) {
    static const double c1[6] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static const double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static const double c3[4] = {0.5440, -0.39978, 0.025054, -6.714e-4};
    static const double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static const double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static const double c6[3] = {-0.4803, -0.082676, 0.0030302};
    static const double g[2] = {-2.273, 0.459};

    const int n = static_cast<int>(samples.size());
    if (n < 3 || n > 5000)
        throw ValidationError("shapiro_wilk: sample count must lie in [3, 5000]");

    std::vector<double> x(samples.begin(), samples.end());
    for (double v : x)
        if (!std::isfinite(v)) throw ValidationError("shapiro_wilk: non-finite sample");
    std::sort(x.begin(), x.end());
    const double range = x.back() - x.front();
    if (!(range > 0.0)) throw ValidationError("shapiro_wilk: zero variance");

    // Lower-half weights.
    const int n2 = n / 2;
    std::vector<double> a(n2);
    if (n == 3) {
        a[0] = std::sqrt(0.5);
    } else {
        const double an25 = n + 0.25;
        double summ2 = 0.0;
        for (int i = 0; i < n2; ++i) {
            a[i] = normal_quantile((i + 1 - 0.375) / an25);
            summ2 += a[i] * a[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
        const double a1 = detail::royston_poly(c1, 6, rsn) - a[0] / ssumm2;

        double fac;
        int i1;
        if (n > 5) {
            i1 = 3;
            const double a2 = -a[1] / ssumm2 + detail::royston_poly(c2, 6, rsn);
            fac = std::sqrt((summ2 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]) /
                            (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[1] = a2;
        } else {
            i1 = 2;
            fac = std::sqrt((summ2 - 2.0 * a[0] * a[0]) / (1.0 - 2.0 * a1 * a1));
        }
        a[0] = a1;
        for (int i = i1 - 1; i < n2; ++i) a[i] /= -fac;
    }

    // W as the squared correlation between the data and the full antisymmetric
    // coefficient vector; 1-W is accumulated directly for stability near 1.
    auto coeff = [&](int i) -> double {
        const int j = n - 1 - i;
        if (i == j) return 0.0;
        return (i < j) ? -a[i] : a[j];
    };
    double sa = 0.0, sx = 0.0;
    for (int i = 0; i < n; ++i) {
        sa += coeff(i);
        sx += x[i] / range;
    }
    sa /= n;
    sx /= n;
    double ssa = 0.0, ssx = 0.0, sax = 0.0;
    for (int i = 0; i < n; ++i) {
        const double da = coeff(i) - sa;
        const double dx = x[i] / range - sx;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    const double ssassx = std::sqrt(ssa * ssx);
    double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    if (w1 < 0.0) w1 = 0.0;
    if (w1 > 1.0) w1 = 1.0;
    const double w = 1.0 - w1;

    // p-value.
    double p;
    if (n == 3) {
        const double pi6 = 1.90985931710274;  // 6/pi
        const double stqr = 1.04719755119660; // asin(sqrt(3/4))
        p = pi6 * (std::asin(std::sqrt(w)) - stqr);
        p = std::clamp(p, 0.0, 1.0);
        return {w, p};
    }
    const double y = std::log(w1);
    double m, s, z;
    if (n <= 11) {
        const double an = n;
        const double gamma = detail::royston_poly(g, 2, an);
        if (y >= gamma) return {w, 1e-99};
        m = detail::royston_poly(c3, 4, an);
        s = std::exp(detail::royston_poly(c4, 4, an));
        z = (-std::log(gamma - y) - m) / s;
    } else {
        const double xx = std::log(static_cast<double>(n));
        m = detail::royston_poly(c5, 4, xx);
        s = std::exp(detail::royston_poly(c6, 3, xx));
        z = (y - m) / s;
    }
    p = 1.0 - normal_cdf(z); // upper tail
    return {w, p};
}

} // namespace talkstab
