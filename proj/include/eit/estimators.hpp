#ifndef EIT_ESTIMATORS_HPP
#define EIT_ESTIMATORS_HPP

#include <vector>

#include "eit/mesh.hpp"
#include "eit/objective.hpp"
#include "eit/types.hpp"

namespace eit {

// Per-element error indicators. eta3_q is the q-th power (analogous to the
// squares), so marking compares like with like.
struct IndicatorTable {
  std::vector<double> eta1_sq;
  std::vector<double> eta2_sq;
  std::vector<double> eta3_q;
  double q = 2.0;

  double total1() const;
  double total2() const;
  double total3() const;
};

// Interior residual grad(sigma) . grad(w), constant per element (w P1).
double residual_r1(const Mesh& mesh, int t, const NodalField& sigma,
                   const NodalField& w);

// Linear function a + b s on a face, s in [0,1] from face.v[0] to face.v[1].
struct LinearTrace {
  double a = 0.0, b = 0.0;
  double value(double s) const { return a + b * s; }
  // Exact L2 norm squared over the face of length h.
  double norm_sq(double h) const;
  // Exact integral of |.|^q over the face (2 for q == 2, quadrature
  // otherwise).
  double lq_norm_q(double h, double q) const;
};

// Flux mismatch of w across/at face f: interior faces carry the normal flux
// jump [sigma grad w . n], electrode faces sigma grad w . n + (w - U_l)/z_l,
// insulated faces sigma grad w . n. voltages are only read on electrode
// faces.
LinearTrace jump_j1(const Mesh& mesh, int f, const NodalField& sigma,
                    const NodalField& w, const ElectrodeVoltages& voltages);

// alpha eps [grad sigma . n] across face f (one-sided on the boundary);
// constant per face.
double jump_j2(const Mesh& mesh, int f, const NodalField& sigma,
               const RegularizationParams& params);

// Optimality residual (alpha/2eps) W'(sigma) - sum_p grad u_p . grad p_p;
// returns int_T |.|^q (degree-6 quadrature; exact for q = 2).
double residual_r2_lq(const Mesh& mesh, int t, const NodalField& sigma,
                      const std::vector<StateSolution>& states,
                      const std::vector<AdjointSolution>& adjoints,
                      const RegularizationParams& params, double q);

// eta_{T,i} with h_T = sqrt(|T|), h_F = |F|:
//   eta1_sq = sum_p [ h_T^2 ||R1(sigma,u_p)||_T^2 + sum_F h_F ||J1||_F^2 ]
//   eta2_sq = same with the adjoint pairs (p_p, P_p)
//   eta3_q  = h_T^q ||R2||_{Lq(T)}^q + sum_F h_F ||J2||_{Lq(F)}^q
// Face terms count for both adjacent elements.
IndicatorTable compute_indicators(const Mesh& mesh, const NodalField& sigma,
                                  const std::vector<StateSolution>& states,
                                  const std::vector<AdjointSolution>& adjoints,
                                  const RegularizationParams& params,
                                  double q = 2.0);

}  // namespace eit

#endif
