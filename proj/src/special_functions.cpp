#include "diffinv/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "diffinv/error.hpp"

namespace diffinv {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Ascending power series; accurate while x stays moderate.
double bessel_j_series(int m, double x) {
    const double half = 0.5 * x;
    const double q = -half * half;
    double term = std::exp(m * std::log(half) - std::lgamma(m + 1.0));
    double sum = term;
    for (int k = 1; k < 500; ++k) {
        term *= q / (double(k) * double(k + m));
        sum += term;
        if (std::abs(term) < kEps * std::abs(sum)) break;
    }
    return sum;
}

// Hankel asymptotic expansion for x much larger than m^2.
double bessel_j_asymptotic(int m, double x) {
    const double mu = 4.0 * m * m;
    double p = 1.0, q = 0.0;
    double term = 1.0;
    double last = std::numeric_limits<double>::max();
    for (int k = 1; k < 60; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (k * 8.0 * x);
        if (std::abs(term) >= last || std::abs(term) < 1e-17) break;
        last = std::abs(term);
        // Terms alternate between Q (odd k) and P (even k) with sign pattern
        // +Q, -P, -Q, +P, ...
        switch (k % 4) {
            case 1: q += term; break;
            case 2: p -= term; break;
            case 3: q -= term; break;
            case 0: p += term; break;
        }
    }
    const double chi = x - (0.5 * m + 0.25) * kPi;
    return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

// Miller's backward recurrence normalised by J_0 + 2 sum_k J_2k = 1.
double bessel_j_miller(int m, double x) {
    const double top = std::max<double>(m, x);
    int start = static_cast<int>(top + 20.0 + 2.0 * std::sqrt(40.0 * top));
    start += start % 2;
    const double two_over_x = 2.0 / x;
    double next = 0.0, cur = 1e-300, result = 0.0, norm = 0.0;
    for (int k = start; k > 0; --k) {
        const double prev = k * two_over_x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds the unnormalised J_{k-1}.
        if (std::abs(cur) > 1e250) {
            cur *= 1e-250;
            next *= 1e-250;
            result *= 1e-250;
            norm *= 1e-250;
        }
        if (k - 1 == m) result = cur;
        if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * cur;
    }
    norm += cur;
    return result / norm;
}

}  // namespace

double bessel_j(int m, double x) {
    if (m < 0) throw Error("bessel_j: negative order " + std::to_string(m));
    if (x < 0.0) return (m % 2 == 0 ? 1.0 : -1.0) * bessel_j(m, -x);
    if (x == 0.0) return m == 0 ? 1.0 : 0.0;
    if (x <= 12.0 || x < m) return bessel_j_series(m, x);
    if (x > 25.0 + 0.5 * m * m) return bessel_j_asymptotic(m, x);
    return bessel_j_miller(m, x);
}

double bessel_j_derivative(int m, double x) {
    if (m == 0) return -bessel_j(1, x);
    return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x));
}

double mcmahon_zero_estimate(int m, int k) {
    const double beta = (k + 0.5 * m - 0.25) * kPi;
    const double mu = 4.0 * m * m;
    const double b8 = 8.0 * beta;
    return beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * std::pow(b8, 3)) -
           32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * std::pow(b8, 5));
}

namespace {

// Safeguarded Newton on a sign-changing bracket [a, b].
double polish_zero(int m, double a, double b, double seed) {
    double fa = bessel_j(m, a);
    double x = (seed > a && seed < b) ? seed : 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        const double fx = bessel_j(m, x);
        if (fx == 0.0) return x;
        if ((fx < 0.0) == (fa < 0.0)) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        const double d = bessel_j_derivative(m, x);
        double nx = (d != 0.0) ? x - fx / d : 0.5 * (a + b);
        if (!(nx > a && nx < b)) nx = 0.5 * (a + b);
        if (std::abs(nx - x) <= 4.0 * kEps * std::abs(x) || b - a <= 4.0 * kEps * b) return nx;
        x = nx;
    }
    return x;
}

}  // namespace

std::vector<double> bessel_j_zeros(int m, double x_max) {
    if (m < 0) throw Error("bessel_j_zeros: negative order");
    std::vector<double> zeros;
    // All zeros of J_m exceed m, and consecutive zeros are more than 2 apart,
    // so a quarter-unit scan cannot skip a sign change.
    constexpr double step = 0.25;
    double a = std::max(0.5 * m, 1e-3);
    double fa = bessel_j(m, a);
    int k = 0;
    while (a < x_max) {
        const double b = std::min(a + step, x_max);
        const double fb = bessel_j(m, b);
        if (fb == 0.0 || (fa < 0.0) != (fb < 0.0)) {
            ++k;
            const double z = fb == 0.0 ? b : polish_zero(m, a, b, mcmahon_zero_estimate(m, k));
            if (z <= x_max) zeros.push_back(z);
            if (fb == 0.0) {
                a = b + 1e-9;
                fa = bessel_j(m, a);
                continue;
            }
        }
        a = b;
        fa = fb;
    }
    return zeros;
}

double bessel_j_zero(int m, int k) {
    if (m < 0 || k < 1) throw Error("bessel_j_zero: need m >= 0 and k >= 1");
    double horizon = std::max(mcmahon_zero_estimate(m, k), double(m)) + kPi;
    for (;;) {
        auto zeros = bessel_j_zeros(m, horizon);
        if (static_cast<int>(zeros.size()) >= k) return zeros[static_cast<std::size_t>(k - 1)];
        horizon += 2.0 * kPi;
    }
}

// ---------------------------------------------------------------------------
// K_nu by Temme's series (x < 2) or Steed's continued fraction (x >= 2) for
// the fractional order |mu| <= 1/2, then upward recurrence to nu.

namespace {

// gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2.
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl, double& gammi) {
    gampl = 1.0 / std::tgamma(1.0 + mu);
    gammi = 1.0 / std::tgamma(1.0 - mu);
    gam2 = 0.5 * (gammi + gampl);
    if (std::abs(mu) < 0.01) {
        // Odd Taylor coefficients of 1/Gamma(1+z).
        constexpr double c1 = 0.5772156649015329, c3 = -0.0420026350340952, c5 = -0.0421977345555443,
                         c7 = 0.0072189432466630;
        const double m2 = mu * mu;
        gam1 = -(c1 + m2 * (c3 + m2 * (c5 + m2 * c7)));
    } else {
        gam1 = (gammi - gampl) / (2.0 * mu);
    }
}

}  // namespace

double bessel_k(double nu, double x) {
    if (!(nu >= 0.0) || !(x > 0.0)) throw Error("bessel_k: need nu >= 0 and x > 0");
    constexpr int max_iter = 10000;
    const int nl = static_cast<int>(nu + 0.5);
    const double mu = nu - nl;
    const double mu2 = mu * mu;
    const double xi = 1.0 / x;
    const double xi2 = 2.0 * xi;
    double rkmu = 0.0, rk1 = 0.0;

    if (x < 2.0) {
        const double x2 = 0.5 * x;
        const double pimu = kPi * mu;
        const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
        double d = -std::log(x2);
        double e = mu * d;
        const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
        double gam1, gam2, gampl, gammi;
        temme_gammas(mu, gam1, gam2, gampl, gammi);
        double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
        double sum = ff;
        e = std::exp(e);
        double p = 0.5 * e / gampl;
        double q = 0.5 / (e * gammi);
        double c = 1.0;
        d = x2 * x2;
        double sum1 = p;
        int i = 1;
        for (; i <= max_iter; ++i) {
            ff = (i * ff + p + q) / (double(i) * i - mu2);
            c *= d / i;
            p /= i - mu;
            q /= i + mu;
            const double del = c * ff;
            sum += del;
            const double del1 = c * (p - i * ff);
            sum1 += del1;
            if (std::abs(del) < std::abs(sum) * kEps) break;
        }
        if (i > max_iter) throw Error("bessel_k: series did not converge");
        rkmu = sum;
        rk1 = sum1 * xi2;
    } else {
        double b = 2.0 * (1.0 + x);
        double d = 1.0 / b;
        double h = d, delh = d;
        double q1 = 0.0, q2 = 1.0;
        const double a1 = 0.25 - mu2;
        double q = a1, c = a1;
        double a = -a1;
        double s = 1.0 + q * delh;
        int i = 2;
        for (; i <= max_iter; ++i) {
            a -= 2.0 * (i - 1);
            c = -a * c / i;
            const double qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            const double dels = q * delh;
            s += dels;
            if (std::abs(dels / s) < kEps) break;
        }
        if (i > max_iter) throw Error("bessel_k: continued fraction did not converge");
        h *= a1;
        rkmu = std::sqrt(kPi / (2.0 * x)) * std::exp(-x) / s;
        rk1 = rkmu * (mu + x + 0.5 - h) * xi;
    }
    for (int i = 1; i <= nl; ++i) {
        const double next = (mu + i) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = next;
    }
    return rkmu;
}

}  // namespace diffinv
