#include "eit/interp.hpp"

#include <stdexcept>

#include "eit/quadrature.hpp"

namespace eit {

NodalField lagrange_interp(const NodalField& coarse, const Mesh& fine) {
  const size_t n = static_cast<size_t>(fine.n_vertices());
  if (coarse.size() > n)
    throw std::invalid_argument("lagrange_interp: field larger than mesh");
  NodalField out(n);
  std::copy(coarse.begin(), coarse.end(), out.begin());
  for (size_t i = coarse.size(); i < n; ++i) {
    const auto& pr = fine.vertex_parents[i];
    if (pr[0] >= static_cast<int>(i) || pr[1] >= static_cast<int>(i))
      throw std::invalid_argument("lagrange_interp: field not nested");
    out[i] = 0.5 * (out[pr[0]] + out[pr[1]]);
  }
  return out;
}

NodalField lagrange_interp(const std::function<double(double, double)>& v,
                           const Mesh& mesh) {
  NodalField out(mesh.n_vertices());
  for (int i = 0; i < mesh.n_vertices(); ++i)
    out[i] = v(mesh.vertices[i].x, mesh.vertices[i].y);
  return out;
}

std::vector<bool> boundary_vertices(const Mesh& mesh) {
  std::vector<bool> onb(mesh.n_vertices(), false);
  for (const auto& f : mesh.faces) {
    if (f.elems[1] == -1) {
      onb[f.v[0]] = true;
      onb[f.v[1]] = true;
    }
  }
  return onb;
}

namespace {

// Star means per vertex from exact element integrals of v.
NodalField star_means(const Mesh& mesh,
                      const std::vector<double>& element_integral) {
  const auto& star = mesh.vertex_star();
  const auto onb = boundary_vertices(mesh);
  NodalField out(mesh.n_vertices(), 0.0);
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    if (onb[i]) continue;
    double num = 0.0, den = 0.0;
    for (int t : star[i]) {
      num += element_integral[t];
      den += mesh.element_area(t);
    }
    if (den > 0.0) out[i] = num / den;
  }
  return out;
}

}  // namespace

NodalField quasi_interp(const NodalField& v, const Mesh& mesh) {
  if (v.size() != static_cast<size_t>(mesh.n_vertices()))
    throw std::invalid_argument("quasi_interp: field size mismatch");
  std::vector<double> integral(mesh.n_elements());
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const auto& el = mesh.elements[t];
    integral[t] = mesh.element_area(t) *
                  (v[el.v[0]] + v[el.v[1]] + v[el.v[2]]) / 3.0;
  }
  return star_means(mesh, integral);
}

NodalField quasi_interp(const std::function<double(double, double)>& v,
                        const Mesh& mesh) {
  const auto& rule = tri_rule_deg4();
  std::vector<double> integral(mesh.n_elements());
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const auto& el = mesh.elements[t];
    const auto& a = mesh.vertices[el.v[0]];
    const auto& b = mesh.vertices[el.v[1]];
    const auto& c = mesh.vertices[el.v[2]];
    double s = 0.0;
    for (const auto& qp : rule) {
      const double x = qp.l0 * a.x + qp.l1 * b.x + qp.l2 * c.x;
      const double y = qp.l0 * a.y + qp.l1 * b.y + qp.l2 * c.y;
      s += qp.w * v(x, y);
    }
    integral[t] = mesh.element_area(t) * s;
  }
  return star_means(mesh, integral);
}

}  // namespace eit
