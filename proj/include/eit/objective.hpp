#ifndef EIT_OBJECTIVE_HPP
#define EIT_OBJECTIVE_HPP

#include <vector>

#include "eit/mesh.hpp"
#include "eit/types.hpp"

namespace eit {

struct RegularizationParams {
  double eps = 1e-2;    // interface width
  double alpha = 2e-2;  // regularization weight (alpha tilde)
  double c0 = 1.0;      // lower conductivity level
  double c1 = 2.0;      // upper conductivity level

  // c_W = int_{c0}^{c1} sqrt(W(s)) ds = (c1-c0)^3 / 6, for reporting
  // alpha = alpha_tilde * c_W.
  double cw() const {
    const double d = c1 - c0;
    return d * d * d / 6.0;
  }
};

// W(s) = (s-c0)^2 (s-c1)^2 and its derivative.
double double_well(double s, double c0, double c1);
double double_well_deriv(double s, double c0, double c1);

// eps ||grad sigma||^2 + (1/eps) int W(sigma), with the well term integrated
// exactly (degree-4 rule on each triangle).
double mm_functional(const Mesh& mesh, const NodalField& sigma,
                     const RegularizationParams& params);

// (1/2) sum_patterns ||U - U_delta||^2.
double fidelity(const std::vector<ElectrodeVoltages>& computed,
                const std::vector<ElectrodeVoltages>& data);

// J_eps = fidelity + (alpha/2) F_eps.
double objective_value(const Mesh& mesh, const NodalField& sigma,
                       const std::vector<ElectrodeVoltages>& computed,
                       const std::vector<ElectrodeVoltages>& data,
                       const RegularizationParams& params);

// Dual (load) vector g with g . mu = J_eps'(sigma)[mu] for P1 directions mu:
// alpha [eps (grad sigma, grad mu) + (1/2eps)(W'(sigma), mu)]
//   - sum_patterns (mu grad u, grad p).
NodalField gateaux_gradient(const Mesh& mesh, const NodalField& sigma,
                            const std::vector<StateSolution>& states,
                            const std::vector<AdjointSolution>& adjoints,
                            const RegularizationParams& params);

// Nodal clamp to [c0, c1].
NodalField project_box(NodalField sigma, double c0, double c1);

}  // namespace eit

#endif
