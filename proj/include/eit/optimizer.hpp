#ifndef EIT_OPTIMIZER_HPP
#define EIT_OPTIMIZER_HPP

#include <vector>

#include "eit/cem.hpp"
#include "eit/mesh.hpp"
#include "eit/objective.hpp"
#include "eit/types.hpp"

namespace eit {

// p(z) = (z - c0)(z - c1), the square root of the double well up to sign,
// and its first-order expansion p(z_k) + p'(z_k)(z - z_k). The surrogate
// replaces W = p^2 by the square of the linearization.
double well_root(double z, double c0, double c1);
double linearize_well(double z, double z_k, double c0, double c1);

// Directional derivative of the electrode voltages: for each pattern, solve
// the sensitivity problem a(sigma,(w,W),(v,V)) = -(dsigma grad u, grad v)
// and return W. states must hold the forward solutions behind factor.
std::vector<ElectrodeVoltages> jacobian_action(
    const CemSystem& system, const CemFactor& factor,
    const std::vector<StateSolution>& states, const NodalField& dsigma);

// Adjoint of jacobian_action as a dual vector on P1:
// (result, phi_i) = sum_p -(phi_i grad u_p, grad q_p) with q_p the adjoint
// solution for data d[p].
NodalField adjoint_action(const CemSystem& system, const CemFactor& factor,
                          const std::vector<StateSolution>& states,
                          const std::vector<ElectrodeVoltages>& d);

struct GaussNewtonOptions {
  RegularizationParams reg;
  double inner_tolerance = 1e-8;
  int inner_max_iterations = 500;
  int max_outer_iterations = 50;
  // Stop when ||sigma_{k+1} - sigma_k||_inf < step_tolerance * (c1 - c0).
  double step_tolerance = 1e-4;
  int line_search_halvings = 10;  // tries s = 1, 1/2, ..., 2^-10
  double forward_tolerance = 1e-10;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double data_misfit = 0.0;   // (1/2) sum ||U - U_delta||^2
  double regularizer = 0.0;   // F_eps(sigma)
  double step = 0.0;          // accepted line-search step
  int inner_iterations = 0;   // CG iterations of the normal equations
  double update_norm = 0.0;   // ||sigma_{k+1} - sigma_k||_inf
};

struct MinimizeResult {
  NodalField sigma;
  std::vector<StateSolution> states;  // forward solutions at the final sigma
  std::vector<IterationRecord> history;
  bool converged = false;
  int iterations = 0;
};

// One Gauss-Newton update: solves the normal equations
//   sum_p U'*U' dsigma + alpha eps K dsigma + (alpha/eps) M_{p'(sigma)^2}
//     dsigma = sum_p U'*(U_delta - U) - (alpha/eps)(p p')(sigma)
//     - alpha eps K sigma
// with matrix-free CG, preconditioned by a sparse factorization of the two
// regularization blocks; p(z) = (z-c0)(z-c1) is the linearized well.
NodalField gauss_newton_step(const Mesh& mesh, const CemSystem& system,
                             const CemFactor& factor,
                             const std::vector<StateSolution>& states,
                             const std::vector<ElectrodeVoltages>& data,
                             const NodalField& sigma,
                             const GaussNewtonOptions& options,
                             CgResult* inner_result = nullptr);

// Full descent loop with projected backtracking line search on the exact
// objective. Iterates stay in the box [c0, c1].
MinimizeResult minimize(const Mesh& mesh,
                        const std::vector<CurrentPattern>& currents,
                        const std::vector<ElectrodeVoltages>& data,
                        NodalField sigma0, const GaussNewtonOptions& options);

}  // namespace eit

#endif
