#include "eit/optimizer.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include "eit/quadrature.hpp"

namespace eit {
namespace {

double well_root_product(double s, double c0, double c1) {
  return (s - c0) * (s - c1);  // p(s)
}

double well_root_product_deriv(double s, double c0, double c1) {
  return 2.0 * s - c0 - c1;  // p'(s)
}

// Dual vector of -(dsigma grad u, grad phi_i); exact since dsigma is P1 and
// the gradients are constant per element.
NodalField sensitivity_rhs(const Mesh& mesh, const NodalField& u,
                           const NodalField& dsigma) {
  NodalField r(mesh.n_vertices(), 0.0);
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const auto& el = mesh.elements[t];
    const double area = mesh.element_area(t);
    const double mean =
        (dsigma[el.v[0]] + dsigma[el.v[1]] + dsigma[el.v[2]]) / 3.0;
    const auto gu = mesh.field_gradient(t, u);
    const auto bg = mesh.basis_gradients(t);
    for (int i = 0; i < 3; ++i) {
      r[el.v[i]] -=
          area * mean * (gu[0] * bg[2 * i] + gu[1] * bg[2 * i + 1]);
    }
  }
  return r;
}

// alpha eps K + (alpha/eps) M with mass weight p'(sigma)^2.
Eigen::SparseMatrix<double> regularization_matrix(
    const Mesh& mesh, const NodalField& sigma,
    const RegularizationParams& reg) {
  const int n = mesh.n_vertices();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * static_cast<size_t>(mesh.n_elements()));
  const auto& rule = tri_rule_deg4();
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const auto& el = mesh.elements[t];
    const double area = mesh.element_area(t);
    const auto bg = mesh.basis_gradients(t);
    const double s0 = sigma[el.v[0]];
    const double s1 = sigma[el.v[1]];
    const double s2 = sigma[el.v[2]];
    double local[3][3] = {};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        local[i][j] = reg.alpha * reg.eps * area *
                      (bg[2 * i] * bg[2 * j] + bg[2 * i + 1] * bg[2 * j + 1]);
    for (const auto& qp : rule) {
      const double s = qp.l0 * s0 + qp.l1 * s1 + qp.l2 * s2;
      const double pd = well_root_product_deriv(s, reg.c0, reg.c1);
      const double c = reg.alpha / reg.eps * area * qp.w * pd * pd;
      const double l[3] = {qp.l0, qp.l1, qp.l2};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) local[i][j] += c * l[i] * l[j];
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(el.v[i], el.v[j], local[i][j]);
  }
  Eigen::SparseMatrix<double> P(n, n);
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

// Forward solves, factorization and objective pieces at one conductivity.
struct ForwardCache {
  std::unique_ptr<CemSystem> system;
  std::unique_ptr<CemFactor> factor;
  std::vector<StateSolution> states;
  double misfit = 0.0;
  double regularizer = 0.0;
  double objective = 0.0;
};

ForwardCache evaluate(const Mesh& mesh,
                      const std::vector<CurrentPattern>& currents,
                      const std::vector<ElectrodeVoltages>& data,
                      const NodalField& sigma,
                      const RegularizationParams& reg) {
  ForwardCache c;
  c.system = std::make_unique<CemSystem>(CemSystem::assemble(mesh, sigma));
  c.factor = std::make_unique<CemFactor>(*c.system);
  c.states.reserve(currents.size());
  std::vector<ElectrodeVoltages> computed;
  computed.reserve(currents.size());
  for (const auto& I : currents) {
    auto s = c.factor->solve(c.system->rhs_from_current(I.values));
    computed.push_back(s.voltages);
    c.states.push_back(std::move(s));
  }
  c.misfit = fidelity(computed, data);
  c.regularizer = mm_functional(mesh, sigma, reg);
  c.objective = c.misfit + 0.5 * reg.alpha * c.regularizer;
  return c;
}

}  // namespace

double well_root(double z, double c0, double c1) {
  return well_root_product(z, c0, c1);
}

double linearize_well(double z, double z_k, double c0, double c1) {
  return well_root_product(z_k, c0, c1) +
         well_root_product_deriv(z_k, c0, c1) * (z - z_k);
}

std::vector<ElectrodeVoltages> jacobian_action(
    const CemSystem& system, const CemFactor& factor,
    const std::vector<StateSolution>& states, const NodalField& dsigma) {
  std::vector<ElectrodeVoltages> out;
  out.reserve(states.size());
  for (const auto& st : states) {
    const auto rhs = system.rhs_from_nodal(
        sensitivity_rhs(system.mesh(), st.u, dsigma));
    out.push_back(system.expand(factor.solve_reduced(rhs)).voltages);
  }
  return out;
}

NodalField adjoint_action(const CemSystem& system, const CemFactor& factor,
                          const std::vector<StateSolution>& states,
                          const std::vector<ElectrodeVoltages>& d) {
  if (states.size() != d.size())
    throw std::invalid_argument("adjoint_action: pattern count mismatch");
  const Mesh& mesh = system.mesh();
  NodalField g(mesh.n_vertices(), 0.0);
  for (size_t p = 0; p < states.size(); ++p) {
    const auto rhs = system.rhs_from_residual(d[p].values);
    const NodalField q = system.expand(factor.solve_reduced(rhs)).u;
    for (int t = 0; t < mesh.n_elements(); ++t) {
      const auto& el = mesh.elements[t];
      const auto gu = mesh.field_gradient(t, states[p].u);
      const auto gq = mesh.field_gradient(t, q);
      const double c =
          -mesh.element_area(t) / 3.0 * (gu[0] * gq[0] + gu[1] * gq[1]);
      g[el.v[0]] += c;
      g[el.v[1]] += c;
      g[el.v[2]] += c;
    }
  }
  return g;
}

NodalField gauss_newton_step(const Mesh& mesh, const CemSystem& system,
                             const CemFactor& factor,
                             const std::vector<StateSolution>& states,
                             const std::vector<ElectrodeVoltages>& data,
                             const NodalField& sigma,
                             const GaussNewtonOptions& options,
                             CgResult* inner_result) {
  const int n = mesh.n_vertices();
  const auto& reg = options.reg;

  Eigen::SparseMatrix<double> P = regularization_matrix(mesh, sigma, reg);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(P);
  if (ldlt.info() != Eigen::Success) {
    // The mass block vanishes where p'(sigma) = 0; nudge the diagonal.
    Eigen::SparseMatrix<double> shifted = P;
    const double shift = 1e-12 * P.diagonal().mean();
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
    ldlt.compute(shifted);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("gauss_newton_step: factorization failed");
  }

  // Right-hand side: data term, well term, gradient term.
  std::vector<ElectrodeVoltages> residual(states.size());
  for (size_t p = 0; p < states.size(); ++p) {
    residual[p].values = data[p].values;
    for (size_t l = 0; l < residual[p].values.size(); ++l)
      residual[p].values[l] -= states[p].voltages.values[l];
  }
  NodalField b = adjoint_action(system, factor, states, residual);
  const auto& rule = tri_rule_deg4();
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const auto& el = mesh.elements[t];
    const double area = mesh.element_area(t);
    const auto bg = mesh.basis_gradients(t);
    const auto gs = mesh.field_gradient(t, sigma);
    for (int i = 0; i < 3; ++i)
      b[el.v[i]] -= reg.alpha * reg.eps * area *
                    (gs[0] * bg[2 * i] + gs[1] * bg[2 * i + 1]);
    const double s0 = sigma[el.v[0]];
    const double s1 = sigma[el.v[1]];
    const double s2 = sigma[el.v[2]];
    for (const auto& qp : rule) {
      const double s = qp.l0 * s0 + qp.l1 * s1 + qp.l2 * s2;
      const double c = reg.alpha / reg.eps * area * qp.w *
                       well_root_product(s, reg.c0, reg.c1) *
                       well_root_product_deriv(s, reg.c0, reg.c1);
      b[el.v[0]] -= c * qp.l0;
      b[el.v[1]] -= c * qp.l1;
      b[el.v[2]] -= c * qp.l2;
    }
  }

  const LinearOperator apply = [&](const std::vector<double>& x,
                                   std::vector<double>& y) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    Eigen::VectorXd Px = P * xv;
    const NodalField jtj =
        adjoint_action(system, factor, states,
                       jacobian_action(system, factor, states, x));
    y.resize(n);
    for (int i = 0; i < n; ++i) y[i] = Px[i] + jtj[i];
  };
  const LinearOperator precond = [&](const std::vector<double>& r,
                                     std::vector<double>& z) {
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), n);
    Eigen::VectorXd zv = ldlt.solve(rv);
    z.assign(zv.data(), zv.data() + n);
  };

  std::vector<double> dsigma(n, 0.0);
  const CgResult res = pcg(apply, precond, b, dsigma,
                           options.inner_tolerance,
                           options.inner_max_iterations);
  if (inner_result) *inner_result = res;
  return dsigma;
}

MinimizeResult minimize(const Mesh& mesh,
                        const std::vector<CurrentPattern>& currents,
                        const std::vector<ElectrodeVoltages>& data,
                        NodalField sigma0, const GaussNewtonOptions& options) {
  const auto& reg = options.reg;
  MinimizeResult result;
  result.sigma = project_box(std::move(sigma0), reg.c0, reg.c1);

  ForwardCache cache = evaluate(mesh, currents, data, result.sigma, reg);
  for (int k = 0; k < options.max_outer_iterations; ++k) {
    CgResult inner;
    const NodalField dsigma =
        gauss_newton_step(mesh, *cache.system, *cache.factor, cache.states,
                          data, result.sigma, options, &inner);

    IterationRecord rec;
    rec.iteration = k;
    rec.objective = cache.objective;
    rec.data_misfit = cache.misfit;
    rec.regularizer = cache.regularizer;
    rec.inner_iterations = inner.iterations;

    // Projected backtracking on the exact objective.
    bool accepted = false;
    double step = 1.0;
    NodalField trial;
    ForwardCache trial_cache;
    for (int h = 0; h <= options.line_search_halvings; ++h, step *= 0.5) {
      trial = result.sigma;
      for (size_t i = 0; i < trial.size(); ++i) trial[i] += step * dsigma[i];
      trial = project_box(std::move(trial), reg.c0, reg.c1);
      trial_cache = evaluate(mesh, currents, data, trial, reg);
      if (trial_cache.objective < cache.objective) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      rec.step = 0.0;
      rec.update_norm = 0.0;
      result.history.push_back(rec);
      result.iterations = k + 1;
      result.converged = true;  // no descent direction left
      break;
    }

    double update_norm = 0.0;
    for (size_t i = 0; i < trial.size(); ++i)
      update_norm = std::max(update_norm, std::abs(trial[i] - result.sigma[i]));
    rec.step = step;
    rec.update_norm = update_norm;
    result.history.push_back(rec);

    result.sigma = std::move(trial);
    cache = std::move(trial_cache);
    result.iterations = k + 1;
    if (update_norm < options.step_tolerance * (reg.c1 - reg.c0)) {
      result.converged = true;
      break;
    }
  }
  result.states = std::move(cache.states);
  return result;
}

}  // namespace eit
