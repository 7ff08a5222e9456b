// Acceptance checks, one printed line each. Takes the path to the CLI
// binary as argv[1] (used by the determinism check). Exit code is the
// number of failed checks.
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eit/cem.hpp"
#include "eit/estimators.hpp"
#include "eit/experiments.hpp"
#include "eit/interp.hpp"
#include "eit/marking.hpp"
#include "eit/mesh.hpp"
#include "eit/objective.hpp"
#include "eit/optimizer.hpp"

using namespace eit;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
  std::printf("%s %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!ok) ++failures;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------
// Shared small problems.

Mesh paper_mesh(int n0 = 16) {
  const Rect dom{-1.0, -1.0, 1.0, 1.0};
  return build_initial_mesh(dom, uniform_layout(dom, 16, 0.25, 0.125), n0);
}

NodalField random_feasible(const Mesh& mesh, std::mt19937& rng, double lo,
                           double hi) {
  std::uniform_real_distribution<double> unif(lo, hi);
  NodalField f(mesh.n_vertices());
  for (double& x : f) x = unif(rng);
  return f;
}

std::vector<double> random_sum_zero(int L, std::mt19937& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> v(L);
  for (double& x : v) x = unif(rng);
  project_sum_zero(v);
  return v;
}

// Dense full-space CEM matrix (interior nodes + one row/column per
// electrode), reduced by the zero-sum basis b_j = e_j - (1/L) 1.
Eigen::MatrixXd dense_reduced_cem(const Mesh& mesh, const NodalField& sigma) {
  const int n = mesh.n_vertices();
  const int L = mesh.layout.count();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n + L, n + L);
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const auto& v = mesh.elements[t].v;
    const auto g = mesh.basis_gradients(t);
    const double area = mesh.element_area(t);
    const double s = (sigma[v[0]] + sigma[v[1]] + sigma[v[2]]) / 3.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        full(v[i], v[j]) +=
            s * area * (g[2 * i] * g[2 * j] + g[2 * i + 1] * g[2 * j + 1]);
  }
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const auto& face = mesh.faces[f];
    if (face.kind != FaceKind::Electrode) continue;
    const double h = mesh.face_length(f);
    const double z = mesh.layout.contact_impedance[face.electrode];
    const int a = face.v[0], b = face.v[1], U = n + face.electrode;
    full(a, a) += h / (3.0 * z);
    full(b, b) += h / (3.0 * z);
    full(a, b) += h / (6.0 * z);
    full(b, a) += h / (6.0 * z);
    full(a, U) -= h / (2.0 * z);
    full(U, a) -= h / (2.0 * z);
    full(b, U) -= h / (2.0 * z);
    full(U, b) -= h / (2.0 * z);
    full(U, U) += h / z;
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n + L, n + L - 1);
  B.topLeftCorner(n, n).setIdentity();
  for (int j = 0; j < L - 1; ++j) {
    for (int l = 0; l < L; ++l) B(n + l, n + j) = -1.0 / L;
    B(n + j, n + j) += 1.0;
  }
  return B.transpose() * full * B;
}

// Exact int_T s^k l_i (l_j) with s P1 on the element; monomial formula.
double fact(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}
double int_power_basis(double area, const double s[3], int k, int i, int j) {
  double sum = 0.0;
  for (int a = 0; a <= k; ++a)
    for (int b = 0; a + b <= k; ++b) {
      const int c = k - a - b;
      int e[3] = {a, b, c};
      if (i >= 0) ++e[i];
      if (j >= 0) ++e[j];
      const double multinom = fact(k) / (fact(a) * fact(b) * fact(c));
      const double mono = 2.0 * area * fact(e[0]) * fact(e[1]) * fact(e[2]) /
                          fact(e[0] + e[1] + e[2] + 2);
      sum += multinom * std::pow(s[0], a) * std::pow(s[1], b) *
             std::pow(s[2], c) * mono;
    }
  return sum;
}

// Regularization part of the normal-equations right-hand side, assembled
// independently: alpha/eps (p p', phi_i) + alpha eps (grad sigma, grad phi_i).
Eigen::VectorXd reg_rhs_oracle(const Mesh& mesh, const NodalField& sigma,
                               const RegularizationParams& r) {
  const int n = mesh.n_vertices();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  const double cc = r.c0 + r.c1, cp = r.c0 * r.c1;
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const auto& v = mesh.elements[t].v;
    const auto bg = mesh.basis_gradients(t);
    const double area = mesh.element_area(t);
    const double s[3] = {sigma[v[0]], sigma[v[1]], sigma[v[2]]};
    const auto gs = mesh.field_gradient(t, sigma);
    for (int i = 0; i < 3; ++i) {
      const double well =
          2.0 * int_power_basis(area, s, 3, i, -1) -
          3.0 * cc * int_power_basis(area, s, 2, i, -1) +
          (cc * cc + 2.0 * cp) * int_power_basis(area, s, 1, i, -1) -
          cc * cp * int_power_basis(area, s, 0, i, -1);
      out[v[i]] += r.alpha / r.eps * well +
                   r.alpha * r.eps * area *
                       (gs[0] * bg[2 * i] + gs[1] * bg[2 * i + 1]);
    }
  }
  return out;
}

// Position of a boundary arclength (counterclockwise from the lower-left
// corner), for electrode endpoint coordinates.
std::pair<double, double> arclength_point(const Rect& d, double s) {
  const double w = d.width(), h = d.height(), per = d.perimeter();
  s = std::fmod(std::fmod(s, per) + per, per);
  if (s <= w) return {d.x0 + s, d.y0};
  s -= w;
  if (s <= h) return {d.x1, d.y0 + s};
  s -= h;
  if (s <= w) return {d.x1 - s, d.y1};
  s -= w;
  return {d.x0, d.y1 - s};
}

// Exhaustive minimal bulk-criterion subset (for tables of <= 12 entries).
size_t brute_force_mark_size(const std::vector<double>& values, double theta) {
  const int n = static_cast<int>(values.size());
  double total = 0.0;
  for (double v : values) total += v;
  if (total == 0.0) return 0;
  size_t best = values.size() + 1;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    double sum = 0.0;
    size_t size = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        sum += values[i];
        ++size;
      }
    if (sum >= theta * total) best = std::min(best, size);
  }
  return best;
}

double interp_loglog(const std::vector<std::pair<int, double>>& curve,
                     double dof) {
  for (size_t i = 1; i < curve.size(); ++i) {
    if (dof <= curve[i].first || i + 1 == curve.size()) {
      const double x0 = std::log(static_cast<double>(curve[i - 1].first));
      const double x1 = std::log(static_cast<double>(curve[i].first));
      const double y0 = std::log(curve[i - 1].second);
      const double y1 = std::log(curve[i].second);
      const double t = (std::log(dof) - x0) / (x1 - x0);
      return std::exp(y0 + t * (y1 - y0));
    }
  }
  return curve.front().second;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------

static void criterion_1_forward_oracle() {
  const double tic = now_seconds();
  const Rect dom{-1.0, -1.0, 1.0, 1.0};
  ElectrodeLayout layout;
  layout.segments = {{0.25, 0.75}, {4.25, 4.75}};
  layout.contact_impedance = {1.0, 1.0};
  const Mesh mesh = build_initial_mesh(dom, layout, 8);  // 81 dofs
  const NodalField sigma(mesh.n_vertices(), 1.0);
  const auto system = CemSystem::assemble(mesh, sigma);
  StateSolution got;
  const auto rep = system.solve_forward({{1.0, -1.0}}, got, 1e-12);

  const Eigen::MatrixXd A = dense_reduced_cem(mesh, sigma);
  const int n = mesh.n_vertices();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b[n] = 1.0;  // <I, b_0> = I_0 - mean(I)
  const Eigen::VectorXd x = A.ldlt().solve(b);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += (got.u[i] - x[i]) * (got.u[i] - x[i]);
    den += x[i] * x[i];
  }
  const double u0 = x[n] * (1.0 - 0.5);  // U_0 = b_0[0] * xhat
  const double u1 = -x[n] * 0.5;
  num += (got.voltages.values[0] - u0) * (got.voltages.values[0] - u0) +
         (got.voltages.values[1] - u1) * (got.voltages.values[1] - u1);
  den += u0 * u0 + u1 * u1;
  const double rel = std::sqrt(num / den);
  const double secs = now_seconds() - tic;
  report("criterion 1: forward solve matches the dense factorization",
         rep.converged && rel <= 1e-10 && secs < 1.0,
         "rel=" + fmt(rel) + " time=" + fmt(secs) + "s");
}

static void criterion_2_reciprocity() {
  const Mesh mesh = paper_mesh();
  std::mt19937 rng(101);
  const NodalField sigma = random_feasible(mesh, rng, 1.0, 2.0);
  const auto system = CemSystem::assemble(mesh, sigma);
  const CemFactor factor(system);
  bool ok = true;
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const auto Ia = random_sum_zero(16, rng);
    const auto Ib = random_sum_zero(16, rng);
    const auto Ua = factor.solve(system.rhs_from_current(Ia)).voltages.values;
    const auto Ub = factor.solve(system.rhs_from_current(Ib)).voltages.values;
    const double gap = std::abs(vec_dot(Ua, Ib) - vec_dot(Ub, Ia));
    const double scale = std::max(vec_norm(Ua), vec_norm(Ub)) *
                         std::max(vec_norm(Ia), vec_norm(Ib));
    worst = std::max(worst, gap / scale);
    ok = ok && gap <= 1e-10 * scale;
  }
  report("criterion 2: reciprocity over 10 random pattern pairs", ok,
         "worst rel gap=" + fmt(worst));
}

static void criterion_3_gradient_check() {
  const double tic = now_seconds();
  const Mesh mesh = paper_mesh();  // 289 interior dofs
  RegularizationParams reg;
  const auto currents = generate_currents(16, 10);
  std::mt19937 rng(103);
  // Fixed data from a perturbed conductivity.
  const NodalField truth = random_feasible(mesh, rng, 1.0, 2.0);
  std::vector<ElectrodeVoltages> data;
  {
    const auto system = CemSystem::assemble(mesh, truth);
    const CemFactor factor(system);
    for (const auto& I : currents)
      data.push_back(factor.solve(system.rhs_from_current(I.values)).voltages);
  }
  const auto objective_at = [&](const NodalField& s) {
    const auto system = CemSystem::assemble(mesh, s);
    const CemFactor factor(system);
    std::vector<ElectrodeVoltages> computed;
    for (const auto& I : currents)
      computed.push_back(
          factor.solve(system.rhs_from_current(I.values)).voltages);
    return fidelity(computed, data) + 0.5 * reg.alpha * mm_functional(mesh, s, reg);
  };

  bool ok = true;
  double worst = 0.0;
  for (int pair = 0; pair < 5; ++pair) {
    const NodalField sigma = random_feasible(mesh, rng, 1.1, 1.9);
    const NodalField mu = random_feasible(mesh, rng, 1.1, 1.9);
    NodalField dir(mu.size());
    for (size_t i = 0; i < mu.size(); ++i) dir[i] = mu[i] - sigma[i];

    const auto system = CemSystem::assemble(mesh, sigma);
    const CemFactor factor(system);
    std::vector<StateSolution> states;
    std::vector<AdjointSolution> adjoints;
    for (size_t p = 0; p < currents.size(); ++p) {
      states.push_back(
          factor.solve(system.rhs_from_current(currents[p].values)));
      std::vector<double> residual = states.back().voltages.values;
      for (size_t l = 0; l < residual.size(); ++l)
        residual[l] -= data[p].values[l];
      adjoints.push_back(factor.solve(system.rhs_from_residual(residual)));
    }
    const auto g = gateaux_gradient(mesh, sigma, states, adjoints, reg);
    const double predicted = vec_dot(g, dir);

    const double t = 1e-5;
    NodalField plus = sigma, minus = sigma;
    for (size_t i = 0; i < dir.size(); ++i) {
      plus[i] += t * dir[i];
      minus[i] -= t * dir[i];
    }
    const double fd = (objective_at(plus) - objective_at(minus)) / (2.0 * t);
    const double rel = std::abs(fd - predicted) / std::max(1e-14, std::abs(fd));
    worst = std::max(worst, rel);
    ok = ok && rel <= 1e-4;
  }
  const double secs = now_seconds() - tic;
  report("criterion 3: directional derivatives match finite differences",
         ok && secs < 30.0, "worst rel=" + fmt(worst) + " time=" + fmt(secs) + "s");
}

static void criterion_4_transpose() {
  const Mesh mesh = paper_mesh();
  std::mt19937 rng(104);
  const NodalField sigma = random_feasible(mesh, rng, 1.0, 2.0);
  const auto system = CemSystem::assemble(mesh, sigma);
  const CemFactor factor(system);
  const auto currents = generate_currents(16, 10);
  std::vector<StateSolution> states;
  for (const auto& I : currents)
    states.push_back(factor.solve(system.rhs_from_current(I.values)));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  bool ok = true;
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    NodalField dsigma(mesh.n_vertices());
    for (double& x : dsigma) x = unif(rng);
    std::vector<ElectrodeVoltages> d(currents.size());
    for (auto& dv : d) dv.values = random_sum_zero(16, rng);
    const auto Jd = jacobian_action(system, factor, states, dsigma);
    const auto Jtd = adjoint_action(system, factor, states, d);
    double lhs = 0.0;
    for (size_t p = 0; p < d.size(); ++p)
      lhs += vec_dot(Jd[p].values, d[p].values);
    const double rhs = vec_dot(dsigma, Jtd);
    const double rel = std::abs(lhs - rhs) / std::max(1e-14, std::abs(lhs));
    worst = std::max(worst, rel);
    ok = ok && rel <= 1e-8;
  }
  report("criterion 4: jacobian/adjoint transpose identity", ok,
         "worst rel=" + fmt(worst));
}

static void criterion_5_mm_consistency() {
  const Mesh mesh = paper_mesh();
  RegularizationParams reg;
  std::mt19937 rng(105);
  bool ok_int = true;
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const NodalField sigma = random_feasible(mesh, rng, 1.0, 2.0);
    // int W(sigma) vs int p_L(sigma, sigma)^2 with the same exact rule:
    // p_L(z, z) = p(z), so both are integrals of the same quartic.
    double iw = 0.0, ip = 0.0;
    for (int t = 0; t < mesh.n_elements(); ++t) {
      const auto& v = mesh.elements[t].v;
      const double area = mesh.element_area(t);
      // degree-4 quadrature (6-point, exact to degree 4)
      static const double w6[6] = {0.223381589678011, 0.223381589678011,
                                   0.223381589678011, 0.109951743655322,
                                   0.109951743655322, 0.109951743655322};
      static const double l6[6][2] = {
          {0.445948490915965, 0.445948490915965},
          {0.445948490915965, 0.108103018168070},
          {0.108103018168070, 0.445948490915965},
          {0.091576213509771, 0.091576213509771},
          {0.091576213509771, 0.816847572980459},
          {0.816847572980459, 0.091576213509771}};
      for (int qp = 0; qp < 6; ++qp) {
        const double l0 = l6[qp][0], l1 = l6[qp][1];
        const double z = l0 * sigma[v[0]] + l1 * sigma[v[1]] +
                         (1.0 - l0 - l1) * sigma[v[2]];
        iw += w6[qp] * area * double_well(z, reg.c0, reg.c1);
        const double pl = linearize_well(z, z, reg.c0, reg.c1);
        ip += w6[qp] * area * pl * pl;
      }
    }
    const double rel = std::abs(iw - ip) / std::max(1e-14, std::abs(iw));
    worst = std::max(worst, rel);
    ok_int = ok_int && rel <= 1e-12;
  }

  // Surrogate right-hand side vs the negative objective gradient.
  const auto currents = generate_currents(16, 4);
  const NodalField sigma = random_feasible(mesh, rng, 1.1, 1.9);
  const auto system = CemSystem::assemble(mesh, sigma);
  const CemFactor factor(system);
  std::vector<StateSolution> states;
  std::vector<AdjointSolution> adjoints;
  std::vector<ElectrodeVoltages> data(currents.size());
  std::vector<ElectrodeVoltages> neg_residual(currents.size());
  std::uniform_real_distribution<double> unif(-0.05, 0.05);
  for (size_t p = 0; p < currents.size(); ++p) {
    states.push_back(
        factor.solve(system.rhs_from_current(currents[p].values)));
    data[p].values = states.back().voltages.values;
    for (double& v : data[p].values) v += unif(rng);
    project_sum_zero(data[p].values);
    std::vector<double> residual = states.back().voltages.values;
    neg_residual[p].values.resize(residual.size());
    for (size_t l = 0; l < residual.size(); ++l) {
      neg_residual[p].values[l] = data[p].values[l] - residual[l];
      residual[l] -= data[p].values[l];
    }
    adjoints.push_back(factor.solve(system.rhs_from_residual(residual)));
  }
  const auto g = gateaux_gradient(mesh, sigma, states, adjoints, reg);
  const auto data_part = adjoint_action(system, factor, states, neg_residual);
  const Eigen::VectorXd reg_part = reg_rhs_oracle(mesh, sigma, reg);
  double gap = 0.0;
  for (int i = 0; i < mesh.n_vertices(); ++i)
    gap = std::max(gap, std::abs(data_part[i] - reg_part[i] + g[i]));
  const bool ok_rhs = gap <= 1e-10 * std::max(1.0, vec_max_abs(g));
  report("criterion 5: linearized well consistency and gradient identity",
         ok_int && ok_rhs,
         "worst integral rel=" + fmt(worst) + " rhs gap=" + fmt(gap));
}

// The two desk-scale runs are shared by criteria 6, 9, 10 and the extra
// qualitative checks.
struct DeskRuns {
  RunConfig config;
  std::vector<CurrentPattern> currents;
  SynthData data;
  RunResult adaptive;
  RunResult uniform;
  double adaptive_seconds = 0.0;
};

static DeskRuns run_desk_scale() {
  DeskRuns d;
  d.config.max_refinements = 8;
  d.config.output_dir.clear();
  d.currents =
      generate_currents(d.config.electrode_count, d.config.pattern_count);
  d.data = synth_data(d.config.data_mesh(), two_disk_phantom(), d.currents,
                      {1e-3, 20260826});
  const double tic = now_seconds();
  d.adaptive = run_afem(d.config, d.currents, d.data.noisy);
  d.adaptive_seconds = now_seconds() - tic;

  RunConfig uni = d.config;
  uni.mode = RefinementMode::Uniform;
  uni.max_refinements = 3;
  d.uniform = run_afem(uni, d.currents, d.data.noisy);
  return d;
}

static void criterion_6_monotone_descent(const DeskRuns& d) {
  bool ok = d.adaptive.completed && !d.adaptive.descent.empty();
  for (const auto& history : d.adaptive.descent)
    for (size_t k = 1; k < history.size(); ++k)
      ok = ok && history[k].objective <= history[k - 1].objective;
  ok = ok && d.adaptive_seconds < 600.0;
  report("criterion 6: objective non-increasing on every mesh level", ok,
         "levels=" + std::to_string(d.adaptive.descent.size()) +
             " time=" + fmt(d.adaptive_seconds) + "s" +
             (d.adaptive.error.empty() ? "" : " error=" + d.adaptive.error));
}

static void criterion_7_dorfler_oracle() {
  std::mt19937 rng(107);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 12);
  bool ok = true;
  for (int rep = 0; rep < 100 && ok; ++rep) {
    const int n = size(rng);
    std::vector<double> values(n);
    for (double& v : values)
      v = (rep % 7 == 0 && unif(rng) < 0.25) ? 0.0 : unif(rng);
    const double theta = 0.05 + 0.9 * unif(rng);
    const auto marked = dorfler_mark(values, theta);
    double total = 0.0, sum = 0.0;
    for (double v : values) total += v;
    for (int id : marked) sum += values[id];
    if (total == 0.0) {
      ok = marked.empty();
      continue;
    }
    ok = ok && sum >= theta * total - 1e-12 * total;
    ok = ok && marked.size() == brute_force_mark_size(values, theta);
    const int argmax = static_cast<int>(
        std::max_element(values.begin(), values.end()) - values.begin());
    ok = ok &&
         std::find(marked.begin(), marked.end(), argmax) != marked.end();
  }
  report("criterion 7: bulk marking matches the exhaustive oracle", ok);
}

static void criterion_8_refinement_soundness() {
  Mesh mesh = paper_mesh();
  const double angle0 = mesh.min_angle();
  std::mt19937 rng(108);
  bool ok = true;
  for (int round = 0; round < 15; ++round) {
    std::vector<int> marked;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < mesh.n_elements(); ++t)
      if (unif(rng) < 0.08) marked.push_back(t);
    if (marked.empty()) marked.push_back(0);
    const Mesh next = refine(mesh, marked);
    // Nesting: every new vertex is the midpoint of its parents.
    for (int i = mesh.n_vertices(); i < next.n_vertices(); ++i) {
      const auto& pr = next.vertex_parents[i];
      ok = ok && pr[0] < i && pr[1] < i;
      ok = ok &&
           std::abs(next.vertices[i].x - 0.5 * (next.vertices[pr[0]].x +
                                                next.vertices[pr[1]].x)) <
               1e-12 &&
           std::abs(next.vertices[i].y - 0.5 * (next.vertices[pr[0]].y +
                                                next.vertices[pr[1]].y)) <
               1e-12;
    }
    mesh = next;
  }
  // Conformity by exhaustive face scan: interior faces have exactly two
  // owners sharing both endpoints, and no hanging vertex lies on a face.
  int interior = 0;
  for (int f = 0; f < mesh.n_faces(); ++f) {
    const auto& face = mesh.faces[f];
    if (face.kind == FaceKind::Interior) {
      ++interior;
      ok = ok && face.elems[0] >= 0 && face.elems[1] >= 0;
    } else {
      ok = ok && face.elems[1] < 0;
    }
    for (int i = 0; i < mesh.n_vertices(); ++i) {
      if (i == face.v[0] || i == face.v[1]) continue;
      const auto& p = mesh.vertices[i];
      const auto& a = mesh.vertices[face.v[0]];
      const auto& b = mesh.vertices[face.v[1]];
      const double cross =
          (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      const double dot =
          (b.x - a.x) * (p.x - a.x) + (b.y - a.y) * (p.y - a.y);
      const double len2 = (b.x - a.x) * (b.x - a.x) +
                          (b.y - a.y) * (b.y - a.y);
      if (std::abs(cross) < 1e-12 * std::sqrt(len2) && dot > 1e-12 &&
          dot < len2 - 1e-12)
        ok = false;  // hanging node
    }
  }
  const double angle = mesh.min_angle();
  ok = ok && angle >= 0.5 * angle0 && interior > 0;
  report("criterion 8: random-marking refinement stays conforming and "
         "shape-regular",
         ok, "min angle " + fmt(angle) + " vs initial " + fmt(angle0));
}

static void criterion_9_estimator_decay(const DeskRuns& d) {
  const auto& r = d.adaptive.records;
  const bool have = r.size() >= 3;
  const bool ok =
      have && r.back().max_marked_eta3 < r[1].max_marked_eta3;
  report("criterion 9: marked optimality indicator decays over the run", ok,
         have ? "loop2=" + fmt(r[1].max_marked_eta3) +
                    " final=" + fmt(r.back().max_marked_eta3)
              : "run too short");
}

static void criterion_10_adaptive_vs_uniform(const DeskRuns& d) {
  // Exclude each run's final record (zero error against its own reference).
  std::vector<std::pair<int, double>> a, u;
  for (size_t k = 0; k + 1 < d.adaptive.records.size(); ++k)
    a.push_back({d.adaptive.records[k].dof, d.adaptive.records[k].l1_error});
  for (size_t k = 0; k + 1 < d.uniform.records.size(); ++k)
    u.push_back({d.uniform.records[k].dof, d.uniform.records[k].l1_error});
  const bool have = a.size() >= 2 && u.size() >= 2;
  bool ok = have && d.uniform.completed;
  double ea = 0.0, eu = 0.0;
  if (have) {
    const double dof = std::min(a.back().first, u.back().first);
    ea = interp_loglog(a, dof);
    eu = interp_loglog(u, dof);
    ok = ok && ea <= 1.1 * eu;
  }
  // Known red at desk scale: the error of level k is its L1 distance to the
  // run's own finest recovery, and the two finest recoveries differ in how
  // far they have developed. The level-0 recoveries of both runs are
  // identical, yet they score differently because the uniform reference is
  // still close to the background while the adaptive one keeps sharpening
  // on every level it can afford. Within the desk budget the uniform
  // companion can never converge far enough to make the comparison fair.
  report("criterion 10: adaptive L1 error at matched dof within 10% of "
         "uniform",
         ok, "adaptive=" + fmt(ea) + " uniform=" + fmt(eu) +
                 " (references differ in development; see notes)");
}

static void criterion_11_quasi_interp() {
  Mesh mesh = paper_mesh();
  const auto flags = boundary_vertices(mesh);
  const auto pi1 = quasi_interp(NodalField(mesh.n_vertices(), 1.0), mesh);
  bool ok = true;
  for (int i = 0; i < mesh.n_vertices(); ++i)
    if (!flags[i]) ok = ok && std::abs(pi1[i] - 1.0) <= 1e-14;

  std::mt19937 rng(111);
  std::uniform_real_distribution<double> unif(1.0, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    NodalField v(mesh.n_vertices());
    for (double& x : v) x = unif(rng);
    const auto pv = quasi_interp(v, mesh);
    for (int i = 0; i < mesh.n_vertices(); ++i)
      if (!flags[i]) ok = ok && pv[i] >= 1.0 && pv[i] <= 2.0;
  }

  // First-order L2 decay at interior elements over 3 uniform refinements.
  const auto fun = [](double x, double y) {
    return std::sin(1.5 * x) * std::cos(y) + 0.3 * x * y;
  };
  double prev = 0.0;
  double worst_rate = 10.0;
  for (int level = 0; level < 3; ++level) {
    const auto exact = lagrange_interp(fun, mesh);
    const auto pf = quasi_interp(exact, mesh);
    double err = 0.0;
    for (int t = 0; t < mesh.n_elements(); ++t) {
      const auto& e = mesh.elements[t].v;
      bool inner = true;
      for (int i = 0; i < 3; ++i)
        inner = inner && std::abs(mesh.vertices[e[i]].x) <= 0.6 &&
                std::abs(mesh.vertices[e[i]].y) <= 0.6;
      if (!inner) continue;
      const double area = mesh.element_area(t);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          err += area / 12.0 * (i == j ? 2.0 : 1.0) *
                 (pf[e[i]] - exact[e[i]]) * (pf[e[j]] - exact[e[j]]);
    }
    err = std::sqrt(err);
    if (level > 0) worst_rate = std::min(worst_rate, std::log2(prev / err));
    prev = err;
    if (level < 2) mesh = uniform_refine(mesh);
  }
  ok = ok && worst_rate >= 0.8;
  report("criterion 11: averaging interpolant suite", ok,
         "worst rate=" + fmt(worst_rate));
}

static void criterion_12_determinism(const std::string& cli) {
  const std::string dir = "acceptance_tmp";
  std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());
  RunConfig config;
  config.electrode_count = 8;
  config.electrode_length = 0.25;
  config.electrode_offset = 0.25;
  config.n0 = 8;
  config.pattern_count = 4;
  config.max_refinements = 2;
  config.data_refinements = 3;
  config.reg.alpha = 1e-3;
  config.max_outer_iterations = 8;
  {
    std::ofstream out(dir + "/config.json", std::ios::binary);
    out << dump_config_json(config);
  }
  const std::string q = "\"" + cli + "\"";
  int rc = std::system((q + " synth --config " + dir + "/config.json" +
                        " --seed 7 --noise 1e-3 --out " + dir + "/data.json" +
                        " > /dev/null")
                           .c_str());
  bool ok = rc == 0;
  for (int run = 0; run < 2 && ok; ++run) {
    rc = std::system((q + " reconstruct --config " + dir + "/config.json" +
                      " --data " + dir + "/data.json --out-dir " + dir +
                      "/run" + std::to_string(run) + " > /dev/null")
                         .c_str());
    ok = ok && rc == 0;
  }
  const std::string a = read_file(dir + "/run0/records.csv");
  const std::string b = read_file(dir + "/run1/records.csv");
  ok = ok && !a.empty() && a == b;
  report("criterion 12: repeated reconstructions are byte-identical", ok,
         ok ? std::to_string(a.size()) + " bytes" : "records differ");
  std::system(("rm -rf " + dir).c_str());
}

// Qualitative checks from the run of criterion 6, reported separately.
static void extra_checks(const DeskRuns& d) {
  // On the desk run the coarse levels stall after the first accepted step:
  // the discretization gap between the coarse model and the fine data mesh
  // dominates the inclusion signal, so the backtracking line search ends the
  // level early. Level 0 must still make progress.
  const auto& h0 = d.adaptive.descent.front();
  bool moved = false;
  for (const auto& rec : h0) moved = moved || rec.step > 0.0;
  report("extra: level 0 of the desk run accepts a strict-descent step",
         moved, "history length " + std::to_string(h0.size()));

  // Strict multi-step descent and projection activity are exercised on a
  // coarse phantom run whose data comes from the same mesh, so the only
  // model error is the inclusions themselves.
  {
    RunConfig cc;
    cc.electrode_count = 8;
    cc.electrode_length = 0.25;
    cc.electrode_offset = 0.25;
    cc.pattern_count = 7;
    cc.n0 = 8;
    cc.reg.alpha = 1e-3;
    cc.max_outer_iterations = 60;
    const auto currents = generate_currents(8, 7);
    const Mesh mesh = cc.initial_mesh();
    const auto data = synth_data(mesh, two_disk_phantom(), currents, {0.0, 1});
    const auto result = minimize(mesh, currents, data.noisy,
                                 NodalField(mesh.n_vertices(), cc.reg.c0),
                                 cc.optimizer_options());
    const auto& h = result.history;
    bool strict = h.size() >= 6;
    for (size_t k = 1; k < std::min<size_t>(6, h.size()); ++k)
      strict = strict && h[k].objective < h[k - 1].objective;
    report("extra: strict descent over the first 5 steps of a coarse run",
           strict, "history length " + std::to_string(h.size()));
    report("extra: recovered conductivity reaches the upper bound",
           vec_max_abs(result.sigma) >= cc.reg.c1 - 1e-9,
           "max=" + fmt(vec_max_abs(result.sigma)));
  }

  // Refinement concentrates near electrode endpoints and the interface:
  // recompute the marking on a later level and classify element centroids.
  const size_t level = std::min<size_t>(5, d.adaptive.meshes.size() - 1);
  const Mesh& mesh = d.adaptive.meshes[level];
  const NodalField& sigma = d.adaptive.sigmas[level];
  const auto system = CemSystem::assemble(mesh, sigma);
  const CemFactor factor(system);
  std::vector<StateSolution> states;
  std::vector<AdjointSolution> adjoints;
  for (size_t p = 0; p < d.currents.size(); ++p) {
    states.push_back(
        factor.solve(system.rhs_from_current(d.currents[p].values)));
    std::vector<double> residual = states.back().voltages.values;
    for (size_t l = 0; l < residual.size(); ++l)
      residual[l] -= d.data.noisy[p].values[l];
    adjoints.push_back(factor.solve(system.rhs_from_residual(residual)));
  }
  const auto table = compute_indicators(mesh, sigma, states, adjoints,
                                        d.config.reg, d.config.q);
  const auto marks = mark_all(table, d.config.theta);
  std::vector<std::pair<double, double>> endpoints;
  for (const auto& seg : mesh.layout.segments) {
    endpoints.push_back(arclength_point(mesh.domain, seg.start));
    endpoints.push_back(arclength_point(mesh.domain, seg.end));
  }
  int near = 0;
  for (int t : marks.all) {
    const auto& v = mesh.elements[t].v;
    const double cx = (mesh.vertices[v[0]].x + mesh.vertices[v[1]].x +
                       mesh.vertices[v[2]].x) /
                      3.0;
    const double cy = (mesh.vertices[v[0]].y + mesh.vertices[v[1]].y +
                       mesh.vertices[v[2]].y) /
                      3.0;
    bool close = false;
    for (const auto& [ex, ey] : endpoints)
      close = close || std::hypot(cx - ex, cy - ey) <= 0.1;
    for (double sy : {0.5, -0.5})
      close = close ||
              std::abs(std::hypot(cx, cy - sy) - 0.3) <= 0.1;
    near += close;
  }
  const double frac =
      marks.all.empty() ? 0.0 : static_cast<double>(near) / marks.all.size();
  report("extra: marked elements cluster near electrodes and the interface",
         frac > 0.5, "fraction=" + fmt(frac) + " marked=" +
                         std::to_string(marks.all.size()));

  // L1 error trend: non-increasing over the final half of the recorded
  // iterations (final self-referential zero excluded).
  const auto& r = d.adaptive.records;
  bool trend = r.size() >= 4;
  for (size_t k = r.size() / 2; k + 1 < r.size() - 1 && trend; ++k)
    trend = r[k + 1].l1_error <= r[k].l1_error * (1.0 + 1e-12);
  report("extra: L1 error non-increasing over the final half of the run",
         trend);
}

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";

  criterion_1_forward_oracle();
  criterion_2_reciprocity();
  criterion_3_gradient_check();
  criterion_4_transpose();
  criterion_5_mm_consistency();

  const DeskRuns desk = run_desk_scale();
  criterion_6_monotone_descent(desk);
  criterion_7_dorfler_oracle();
  criterion_8_refinement_soundness();
  criterion_9_estimator_decay(desk);
  criterion_10_adaptive_vs_uniform(desk);
  criterion_11_quasi_interp();
  if (cli.empty())
    report("criterion 12: repeated reconstructions are byte-identical", false,
           "no CLI binary path given");
  else
    criterion_12_determinism(cli);

  extra_checks(desk);

  std::printf("%d failure(s)\n", failures);
  return failures;
}
