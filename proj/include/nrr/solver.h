#pragma once

#include <functional>
#include <map>

#include "nrr/energy.h"

namespace nrr {

struct SolverConfig {
  int gn_iterations = 10;
  int pcg_iterations = 20;
  double pcg_tolerance = 1e-4;  // relative residual
  double damping = 1e-6;        // Levenberg epsilon on the normal matrix
  bool step_acceptance = true;
  int max_step_halvings = 6;

  void validate() const;
};

struct PcgResult {
  VecXd x;
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
};

/// Jacobi-preconditioned conjugate gradient on an SPD operator given as a
/// matrix-free apply plus its diagonal. Returns zero immediately for a zero
/// right hand side.
PcgResult pcg_solve(const std::function<VecXd(const VecXd&)>& apply,
                    const VecXd& diagonal, const VecXd& rhs, int max_iterations,
                    double tolerance);

/// Convenience overload on a linearized system: solves
/// (J^T J + damping I) delta = rhs.
PcgResult pcg_solve(const LinearSystem& system, double damping,
                    const VecXd& rhs, int max_iterations, double tolerance);

/// (J^T J + damping I) x without materializing the normal matrix.
VecXd apply_normal_matrix(const LinearSystem& system, double damping,
                          const VecXd& x);

struct GnIteration {
  int iteration = 0;
  double energy = 0.0;  // E_total at the linearization point
  std::map<TermKind, double> term_energies;
  int pcg_iterations = 0;
  double step_scale = 0.0;  // 0 when the step was rejected
  bool gradient_fallback = false;
};

struct SolveResult {
  VecXd parameters;
  double final_energy = 0.0;
  std::vector<GnIteration> iterations;
};

/// Gauss-Newton with PCG inner solves and optional step halving. Each
/// iteration relinearizes at the current parameters; accepted updates are
/// additive and rotations are wrapped back into |theta| < pi. Throws
/// NumericalError if the initial energy is not finite.
SolveResult gauss_newton(const EnergySpec& energy, const VecXd& initial,
                         const SolverConfig& config);

}  // namespace nrr
