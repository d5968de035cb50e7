#pragma once

#include <cstddef>
#include <vector>

namespace kss {

// Second-order exponential time differencing (predictor/corrector) for
// diagonal stiff linear parts. For a mode obeying u' = lambda*u + N(u,t) one
// step reads
//   a      = E*u + P1*N(u, t)            E  = e^{lambda*dt}
//   u_next = a + P2*(N(a, t+dt) - N(u,t))
// with P1 = dt*phi1(lambda*dt), P2 = dt*phi2(lambda*dt). The step is exact
// whenever N is constant along the step, which makes constant-forcing
// solutions (damped-heat decay, single-mode Stokes response) exact in time.
struct EtdTable {
  double dt = 0.0;
  std::vector<double> E, P1, P2;  // one entry per mode
};

// phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, continuous at 0.
// phi2 switches to a truncated Taylor series near 0 where the direct formula
// cancels catastrophically.
double etd_phi1(double z);
double etd_phi2(double z);

// lambda holds the per-mode linear symbol (e.g. -|k|^2 or -(|k|^2+1)).
EtdTable make_etd_table(const double* lambda, std::size_t nmodes, double dt);

}  // namespace kss
