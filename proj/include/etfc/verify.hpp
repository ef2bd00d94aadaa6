#ifndef ETFC_VERIFY_HPP
#define ETFC_VERIFY_HPP

#include "etfc/graph.hpp"
#include "etfc/sim.hpp"
#include "etfc/synthesis.hpp"

namespace etfc {

struct DissipationReport {
  double max_violation = 0.0;  // worst normalized slack over the trace
  int worst_step = -1;
  int steps_checked = 0;
  bool pass = false;  // max_violation <= 1e-6
};

// Checks the per-step dissipation inequality
//   V(psi_{k+1}) - V(psi_k) <= -z'z + gamma^2 f'f - sigma etahat'etahat + e'e
// with V the network Lyapunov function induced by the certificate's S, along a
// trace produced under homogeneous scheduling with the certified controller.
DissipationReport verify_lyapunov_decrease(const SimulationTrace& trace,
                                           const SynthesisCertificate& certificate,
                                           const LaplacianSpectrum& spectrum);

}  // namespace etfc

#endif
