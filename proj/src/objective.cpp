#include "eit/objective.hpp"

#include <cmath>
#include <stdexcept>

#include "eit/quadrature.hpp"

namespace eit {

double double_well(double s, double c0, double c1) {
  const double a = s - c0;
  const double b = s - c1;
  return a * a * b * b;
}

double double_well_deriv(double s, double c0, double c1) {
  const double a = s - c0;
  const double b = s - c1;
  return 2.0 * a * b * (a + b);
}

double mm_functional(const Mesh& mesh, const NodalField& sigma,
                     const RegularizationParams& params) {
  if (sigma.size() != static_cast<size_t>(mesh.n_vertices()))
    throw std::invalid_argument("mm_functional: field size mismatch");
  const auto& rule = tri_rule_deg4();
  double grad_term = 0.0;
  double well_term = 0.0;
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const double area = mesh.element_area(t);
    const auto g = mesh.field_gradient(t, sigma);
    grad_term += area * (g[0] * g[0] + g[1] * g[1]);
    const auto& el = mesh.elements[t];
    const double s0 = sigma[el.v[0]];
    const double s1 = sigma[el.v[1]];
    const double s2 = sigma[el.v[2]];
    double w = 0.0;
    for (const auto& qp : rule) {
      const double s = qp.l0 * s0 + qp.l1 * s1 + qp.l2 * s2;
      w += qp.w * double_well(s, params.c0, params.c1);
    }
    well_term += area * w;
  }
  return params.eps * grad_term + well_term / params.eps;
}

double fidelity(const std::vector<ElectrodeVoltages>& computed,
                const std::vector<ElectrodeVoltages>& data) {
  if (computed.size() != data.size())
    throw std::invalid_argument("fidelity: pattern count mismatch");
  double sum = 0.0;
  for (size_t p = 0; p < computed.size(); ++p) {
    const auto& u = computed[p].values;
    const auto& d = data[p].values;
    if (u.size() != d.size())
      throw std::invalid_argument("fidelity: electrode count mismatch");
    for (size_t l = 0; l < u.size(); ++l) {
      const double r = u[l] - d[l];
      sum += r * r;
    }
  }
  return 0.5 * sum;
}

double objective_value(const Mesh& mesh, const NodalField& sigma,
                       const std::vector<ElectrodeVoltages>& computed,
                       const std::vector<ElectrodeVoltages>& data,
                       const RegularizationParams& params) {
  return fidelity(computed, data) +
         0.5 * params.alpha * mm_functional(mesh, sigma, params);
}

NodalField gateaux_gradient(const Mesh& mesh, const NodalField& sigma,
                            const std::vector<StateSolution>& states,
                            const std::vector<AdjointSolution>& adjoints,
                            const RegularizationParams& params) {
  const int n = mesh.n_vertices();
  if (sigma.size() != static_cast<size_t>(n))
    throw std::invalid_argument("gateaux_gradient: field size mismatch");
  if (states.size() != adjoints.size())
    throw std::invalid_argument("gateaux_gradient: state/adjoint mismatch");
  const auto& rule = tri_rule_deg4();
  NodalField g(n, 0.0);
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const auto& el = mesh.elements[t];
    const double area = mesh.element_area(t);
    const auto bg = mesh.basis_gradients(t);
    const auto gs = mesh.field_gradient(t, sigma);

    // alpha * eps (grad sigma, grad phi_i)
    for (int i = 0; i < 3; ++i) {
      g[el.v[i]] += params.alpha * params.eps * area *
                    (gs[0] * bg[2 * i] + gs[1] * bg[2 * i + 1]);
    }

    // alpha/(2 eps) (W'(sigma), phi_i); W'(I_h sigma) phi_i has degree 4
    const double s0 = sigma[el.v[0]];
    const double s1 = sigma[el.v[1]];
    const double s2 = sigma[el.v[2]];
    for (const auto& qp : rule) {
      const double s = qp.l0 * s0 + qp.l1 * s1 + qp.l2 * s2;
      const double wd = double_well_deriv(s, params.c0, params.c1);
      const double c = params.alpha / (2.0 * params.eps) * area * qp.w * wd;
      g[el.v[0]] += c * qp.l0;
      g[el.v[1]] += c * qp.l1;
      g[el.v[2]] += c * qp.l2;
    }

    // -(phi_i grad u, grad p) summed over patterns; int_T phi_i = area/3
    double dot = 0.0;
    for (size_t p = 0; p < states.size(); ++p) {
      const auto gu = mesh.field_gradient(t, states[p].u);
      const auto gp = mesh.field_gradient(t, adjoints[p].u);
      dot += gu[0] * gp[0] + gu[1] * gp[1];
    }
    const double c = -area / 3.0 * dot;
    g[el.v[0]] += c;
    g[el.v[1]] += c;
    g[el.v[2]] += c;
  }
  return g;
}

NodalField project_box(NodalField sigma, double c0, double c1) {
  for (double& s : sigma) s = std::min(std::max(s, c0), c1);
  return sigma;
}

}  // namespace eit
