#include "kss/etd.hpp"

#include <cmath>

namespace kss {

double etd_phi1(double z) {
  if (z == 0.0) return 1.0;
  // expm1 keeps the numerator accurate near 0; the quotient is then stable.
  return std::expm1(z) / z;
}

double etd_phi2(double z) {
  if (std::fabs(z) < 0.1) {
    // phi2(z) = sum_{j>=0} z^j/(j+2)!; ten terms put the truncation error
    // below machine precision for |z| < 0.1.
    double acc = 0.0;
    double factorial = 1.0;  // (j+2)! built incrementally, walking j downward via Horner
    // Horner evaluation of sum_{j=0}^{9} z^j/(j+2)!
    const int terms = 10;
    double coeff[terms];
    for (int j = 0; j < terms; ++j) {
      factorial = 1.0;
      for (int i = 2; i <= j + 2; ++i) factorial *= i;
      coeff[j] = 1.0 / factorial;
    }
    for (int j = terms - 1; j >= 0; --j) acc = acc * z + coeff[j];
    return acc;
  }
  return (std::expm1(z) - z) / (z * z);
}

EtdTable make_etd_table(const double* lambda, std::size_t nmodes, double dt) {
  EtdTable t;
  t.dt = dt;
  t.E.resize(nmodes);
  t.P1.resize(nmodes);
  t.P2.resize(nmodes);
  for (std::size_t i = 0; i < nmodes; ++i) {
    const double z = lambda[i] * dt;
    t.E[i] = std::exp(z);
    t.P1[i] = dt * etd_phi1(z);
    t.P2[i] = dt * etd_phi2(z);
  }
  return t;
}

}  // namespace kss
