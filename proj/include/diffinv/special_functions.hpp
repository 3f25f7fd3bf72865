#pragma once

#include <vector>

namespace diffinv {

// Bessel function of the first kind J_m(x) for integer order m >= 0.
double bessel_j(int m, double x);

// d/dx J_m(x).
double bessel_j_derivative(int m, double x);

// k-th positive zero (k >= 1) of J_m.
double bessel_j_zero(int m, int k);

// All positive zeros of J_m not exceeding x_max, ascending.
std::vector<double> bessel_j_zeros(int m, double x_max);

// McMahon's large-zero expansion, used to seed root polishing.
double mcmahon_zero_estimate(int m, int k);

// Modified Bessel function of the second kind K_nu(x), real nu >= 0, x > 0.
double bessel_k(double nu, double x);

}  // namespace diffinv
