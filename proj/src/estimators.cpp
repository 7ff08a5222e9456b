#include "eit/estimators.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eit/quadrature.hpp"

namespace eit {
namespace {

void check_inputs(const Mesh& mesh, const NodalField& sigma,
                  const std::vector<StateSolution>& states,
                  const std::vector<AdjointSolution>& adjoints) {
  const size_t n = static_cast<size_t>(mesh.n_vertices());
  const size_t L = static_cast<size_t>(mesh.layout.count());
  if (sigma.size() != n)
    throw std::invalid_argument("indicators: sigma not on this mesh");
  if (states.size() != adjoints.size())
    throw std::invalid_argument("indicators: state/adjoint count mismatch");
  for (const auto& s : states)
    if (s.u.size() != n || s.voltages.values.size() != L)
      throw std::invalid_argument("indicators: stale state solution");
  for (const auto& a : adjoints)
    if (a.u.size() != n || a.voltages.values.size() != L)
      throw std::invalid_argument("indicators: stale adjoint solution");
}

// Faces of each element, up to three.
std::vector<std::array<int, 3>> element_faces(const Mesh& mesh) {
  std::vector<std::array<int, 3>> ef(mesh.n_elements(), {-1, -1, -1});
  std::vector<int> count(mesh.n_elements(), 0);
  for (int f = 0; f < mesh.n_faces(); ++f) {
    for (int side = 0; side < 2; ++side) {
      const int t = mesh.faces[f].elems[side];
      if (t >= 0) ef[t][count[t]++] = f;
    }
  }
  return ef;
}

}  // namespace

double IndicatorTable::total1() const {
  return std::accumulate(eta1_sq.begin(), eta1_sq.end(), 0.0);
}
double IndicatorTable::total2() const {
  return std::accumulate(eta2_sq.begin(), eta2_sq.end(), 0.0);
}
double IndicatorTable::total3() const {
  return std::accumulate(eta3_q.begin(), eta3_q.end(), 0.0);
}

double residual_r1(const Mesh& mesh, int t, const NodalField& sigma,
                   const NodalField& w) {
  const auto gs = mesh.field_gradient(t, sigma);
  const auto gw = mesh.field_gradient(t, w);
  return gs[0] * gw[0] + gs[1] * gw[1];
}

double LinearTrace::norm_sq(double h) const {
  return h * (a * a + a * b + b * b / 3.0);
}

double LinearTrace::lq_norm_q(double h, double q) const {
  if (q == 2.0) return norm_sq(h);
  if (b == 0.0) return h * std::pow(std::abs(a), q);
  // Antiderivative of |a + b s|^q is sign(a+bs)|a+bs|^{q+1}/(b(q+1));
  // split at the sign change when it lies inside the face.
  const auto anti = [&](double s) {
    const double f = a + b * s;
    const double m = std::pow(std::abs(f), q + 1.0) / (b * (q + 1.0));
    return f >= 0.0 ? m : -m;
  };
  const double root = -a / b;
  double integral;
  if (root > 0.0 && root < 1.0)
    integral = (anti(root) - anti(0.0)) + (anti(1.0) - anti(root));
  else
    integral = anti(1.0) - anti(0.0);
  return h * std::abs(integral);
}

LinearTrace jump_j1(const Mesh& mesh, int f, const NodalField& sigma,
                    const NodalField& w, const ElectrodeVoltages& voltages) {
  const Face& face = mesh.faces[f];
  const int v0 = face.v[0];
  const int v1 = face.v[1];
  const auto g0 = mesh.field_gradient(face.elems[0], w);
  double val0, val1;
  if (face.kind == FaceKind::Interior) {
    const auto g1 = mesh.field_gradient(face.elems[1], w);
    const double dflux =
        (g0[0] - g1[0]) * face.nx + (g0[1] - g1[1]) * face.ny;
    val0 = sigma[v0] * dflux;
    val1 = sigma[v1] * dflux;
  } else {
    const double flux = g0[0] * face.nx + g0[1] * face.ny;
    val0 = sigma[v0] * flux;
    val1 = sigma[v1] * flux;
    if (face.kind == FaceKind::Electrode) {
      const double z = mesh.layout.contact_impedance[face.electrode];
      const double U = voltages.values[face.electrode];
      val0 += (w[v0] - U) / z;
      val1 += (w[v1] - U) / z;
    }
  }
  return {val0, val1 - val0};
}

double jump_j2(const Mesh& mesh, int f, const NodalField& sigma,
               const RegularizationParams& params) {
  const Face& face = mesh.faces[f];
  const auto g0 = mesh.field_gradient(face.elems[0], sigma);
  double flux = g0[0] * face.nx + g0[1] * face.ny;
  if (face.elems[1] >= 0) {
    const auto g1 = mesh.field_gradient(face.elems[1], sigma);
    flux -= g1[0] * face.nx + g1[1] * face.ny;
  }
  return params.alpha * params.eps * flux;
}

double residual_r2_lq(const Mesh& mesh, int t, const NodalField& sigma,
                      const std::vector<StateSolution>& states,
                      const std::vector<AdjointSolution>& adjoints,
                      const RegularizationParams& params, double q) {
  double cross = 0.0;
  for (size_t p = 0; p < states.size(); ++p) {
    const auto gu = mesh.field_gradient(t, states[p].u);
    const auto gp = mesh.field_gradient(t, adjoints[p].u);
    cross += gu[0] * gp[0] + gu[1] * gp[1];
  }
  const auto& el = mesh.elements[t];
  const double s0 = sigma[el.v[0]];
  const double s1 = sigma[el.v[1]];
  const double s2 = sigma[el.v[2]];
  const double scale = params.alpha / (2.0 * params.eps);
  double sum = 0.0;
  for (const auto& qp : tri_rule_deg6()) {
    const double s = qp.l0 * s0 + qp.l1 * s1 + qp.l2 * s2;
    const double r = scale * double_well_deriv(s, params.c0, params.c1) - cross;
    sum += qp.w * std::pow(std::abs(r), q);
  }
  return mesh.element_area(t) * sum;
}

IndicatorTable compute_indicators(const Mesh& mesh, const NodalField& sigma,
                                  const std::vector<StateSolution>& states,
                                  const std::vector<AdjointSolution>& adjoints,
                                  const RegularizationParams& params,
                                  double q) {
  check_inputs(mesh, sigma, states, adjoints);
  const int nt = mesh.n_elements();
  const int nf = mesh.n_faces();
  const int np = static_cast<int>(states.size());

  // Face terms first (shared by both neighbors), then element terms.
  std::vector<double> face1_state(nf, 0.0);  // sum_p ||J1(sigma,u_p)||^2
  std::vector<double> face1_adj(nf, 0.0);
  std::vector<double> face3(nf, 0.0);  // ||J2||_{Lq}^q
#pragma omp parallel for schedule(static)
  for (int f = 0; f < nf; ++f) {
    const double h = mesh.face_length(f);
    for (int p = 0; p < np; ++p) {
      face1_state[f] +=
          jump_j1(mesh, f, sigma, states[p].u, states[p].voltages).norm_sq(h);
      face1_adj[f] +=
          jump_j1(mesh, f, sigma, adjoints[p].u, adjoints[p].voltages)
              .norm_sq(h);
    }
    face3[f] = h * std::pow(std::abs(jump_j2(mesh, f, sigma, params)), q);
  }

  const auto ef = element_faces(mesh);
  IndicatorTable table;
  table.q = q;
  table.eta1_sq.assign(nt, 0.0);
  table.eta2_sq.assign(nt, 0.0);
  table.eta3_q.assign(nt, 0.0);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < nt; ++t) {
    const double area = mesh.element_area(t);
    const double ht = std::sqrt(area);
    double r1u = 0.0, r1p = 0.0;
    for (int p = 0; p < np; ++p) {
      const double ru = residual_r1(mesh, t, sigma, states[p].u);
      const double rp = residual_r1(mesh, t, sigma, adjoints[p].u);
      r1u += ru * ru;
      r1p += rp * rp;
    }
    table.eta1_sq[t] = ht * ht * r1u * area;
    table.eta2_sq[t] = ht * ht * r1p * area;
    table.eta3_q[t] = std::pow(ht, q) *
                      residual_r2_lq(mesh, t, sigma, states, adjoints,
                                     params, q);
    for (int f : ef[t]) {
      if (f < 0) continue;
      const double hf = mesh.face_length(f);
      table.eta1_sq[t] += hf * face1_state[f];
      table.eta2_sq[t] += hf * face1_adj[f];
      table.eta3_q[t] += hf * face3[f];
    }
  }
  return table;
}

}  // namespace eit
