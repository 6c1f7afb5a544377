#include "nrr/solver.h"

#include <cmath>
#include <stdexcept>

namespace nrr {

void SolverConfig::validate() const {
  if (gn_iterations < 1 || pcg_iterations < 1)
    throw std::invalid_argument("solver: iteration counts must be >= 1");
  if (!(pcg_tolerance > 0.0))
    throw std::invalid_argument("solver: pcg tolerance must be positive");
  if (!(damping >= 0.0))
    throw std::invalid_argument("solver: damping must be non-negative");
}

PcgResult pcg_solve(const std::function<VecXd(const VecXd&)>& apply,
                    const VecXd& diagonal, const VecXd& rhs,
                    int max_iterations, double tolerance) {
  PcgResult result;
  const Eigen::Index n = rhs.size();
  result.x = VecXd::Zero(n);
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    result.converged = true;
    return result;
  }
  const VecXd inv_diag =
      (diagonal.array() > 0.0).select(diagonal.array().inverse(), 1.0);

  VecXd r = rhs;  // residual b - A x with x = 0
  VecXd z = inv_diag.cwiseProduct(r);
  VecXd p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iterations; ++it) {
    const VecXd ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0) || !std::isfinite(pap)) {
      result.breakdown = true;
      return result;
    }
    const double alpha = rz / pap;
    result.x += alpha * p;
    r -= alpha * ap;
    ++result.iterations;
    if (r.norm() / rhs_norm <= tolerance) {
      result.converged = true;
      return result;
    }
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    if (!std::isfinite(rz_next) || rz_next <= 0.0) {
      result.breakdown = true;
      return result;
    }
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  return result;
}

PcgResult pcg_solve(const LinearSystem& system, double damping,
                    const VecXd& rhs, int max_iterations, double tolerance) {
  return pcg_solve(
      [&](const VecXd& v) { return system.apply_normal(v, damping); },
      system.normal_diagonal(damping), rhs, max_iterations, tolerance);
}

VecXd apply_normal_matrix(const LinearSystem& system, double damping,
                          const VecXd& x) {
  return system.apply_normal(x, damping);
}

namespace {

VecXd wrap_rotations(VecXd x) {
  for (Eigen::Index i = 0; i + 6 <= x.size(); i += 6)
    x.segment<3>(i) = renormalize_rotation(x.segment<3>(i));
  return x;
}

}  // namespace

SolveResult gauss_newton(const EnergySpec& energy, const VecXd& initial,
                         const SolverConfig& config) {
  config.validate();
  if (initial.size() != energy.param_count())
    throw std::invalid_argument("gauss_newton: bad initial parameter size");

  SolveResult result;
  result.parameters = initial;
  double current_energy = energy.energy(result.parameters);
  if (!std::isfinite(current_energy))
    throw NumericalError("gauss_newton: non-finite energy at start");

  for (int it = 0; it < config.gn_iterations; ++it) {
    GnIteration log;
    log.iteration = it;
    log.energy = current_energy;
    log.term_energies = energy.term_energies(result.parameters);

    const LinearSystem system = energy.linearize(result.parameters);
    const VecXd rhs = -system.jtf();
    PcgResult pcg = pcg_solve(system, config.damping, rhs,
                              config.pcg_iterations, config.pcg_tolerance);
    log.pcg_iterations = pcg.iterations;
    if (pcg.breakdown) {
      // Fall back to the steepest-descent step exactly minimizing the
      // quadratic model along the gradient.
      log.gradient_fallback = true;
      const double gg = rhs.squaredNorm();
      if (gg > 0.0) {
        const VecXd ag = system.apply_normal(rhs, config.damping);
        const double gag = rhs.dot(ag);
        pcg.x = (gag > 0.0) ? VecXd((gg / gag) * rhs) : VecXd::Zero(rhs.size());
      } else {
        pcg.x = VecXd::Zero(rhs.size());
      }
    }

    double scale = 1.0;
    bool accepted = false;
    VecXd candidate;
    double candidate_energy = 0.0;
    if (!config.step_acceptance) {
      candidate = wrap_rotations(result.parameters + pcg.x);
      candidate_energy = energy.energy(candidate);
      accepted = std::isfinite(candidate_energy);
    } else {
      for (int h = 0; h <= config.max_step_halvings; ++h) {
        candidate = wrap_rotations(result.parameters + scale * pcg.x);
        candidate_energy = energy.energy(candidate);
        if (std::isfinite(candidate_energy) &&
            candidate_energy <= current_energy) {
          accepted = true;
          break;
        }
        scale *= 0.5;
      }
    }

    if (accepted) {
      log.step_scale = scale;
      result.parameters = std::move(candidate);
      current_energy = candidate_energy;
      result.iterations.push_back(log);
    } else {
      log.step_scale = 0.0;
      result.iterations.push_back(log);
      break;  // relinearizing at the same point cannot make progress
    }
  }
  result.final_energy = current_energy;
  return result;
}

}  // namespace nrr
