#include "eit/cem.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace eit {

namespace {

// Local P1 stiffness of element t scaled by the element mean of sigma.
std::array<double, 9> local_stiffness(const Mesh& mesh, int t,
                                      const NodalField& sigma) {
  const Element& e = mesh.elements[t];
  const auto g = mesh.basis_gradients(t);
  const double area = mesh.element_area(t);
  const double coeff =
      (sigma[e.v[0]] + sigma[e.v[1]] + sigma[e.v[2]]) / 3.0 * area;
  std::array<double, 9> k{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      k[3 * i + j] =
          coeff * (g[2 * i] * g[2 * j] + g[2 * i + 1] * g[2 * j + 1]);
  return k;
}

}  // namespace

CemSystem CemSystem::assemble(const Mesh& mesh, const NodalField& sigma) {
  return assemble_impl(mesh, sigma, true);
}

CemSystem CemSystem::assemble_serial(const Mesh& mesh,
                                     const NodalField& sigma) {
  return assemble_impl(mesh, sigma, false);
}

CemSystem CemSystem::assemble_impl(const Mesh& mesh, const NodalField& sigma,
                                   bool parallel) {
  if (static_cast<int>(sigma.size()) != mesh.n_vertices())
    throw std::invalid_argument("sigma size does not match mesh");
  const int L = mesh.layout.count();
  for (double z : mesh.layout.contact_impedance)
    if (!(z > 0.0)) throw std::invalid_argument("contact impedance must be positive");

  const int n = mesh.n_vertices();
  const int nv_dofs = std::max(L - 1, 0);
  const int dim = n + nv_dofs;

  // Electrode faces incident to each vertex.
  std::vector<std::vector<int>> vertex_efaces(n);
  std::vector<int> electrode_faces;
  for (int f = 0; f < mesh.n_faces(); ++f)
    if (mesh.faces[f].kind == FaceKind::Electrode) {
      electrode_faces.push_back(f);
      vertex_efaces[mesh.faces[f].v[0]].push_back(f);
      vertex_efaces[mesh.faces[f].v[1]].push_back(f);
    }

  std::vector<std::vector<int>> adj(dim);
  const auto& star = mesh.vertex_star();
  for (int i = 0; i < n; ++i) {
    adj[i].push_back(i);
    for (int t : star[i])
      for (int w : mesh.elements[t].v) adj[i].push_back(w);
    if (!vertex_efaces[i].empty())
      for (int j = 0; j < nv_dofs; ++j) adj[i].push_back(n + j);
  }
  for (int j = 0; j < nv_dofs; ++j) {
    for (int i = 0; i < n; ++i)
      if (!vertex_efaces[i].empty()) adj[n + j].push_back(i);
    for (int k = 0; k < nv_dofs; ++k) adj[n + j].push_back(n + k);
  }

  CemSystem sys;
  sys.mesh_ = &mesh;
  sys.n_nodes_ = n;
  sys.n_electrodes_ = L;
  sys.matrix_ = CsrMatrix::from_pattern(adj);
  CsrMatrix& A = sys.matrix_;

  // Per-element and per-face local contributions, then a deterministic
  // row-wise gather.
  std::vector<std::array<double, 9>> elem_k(mesh.n_elements());
#pragma omp parallel for schedule(static) if (parallel)
  for (int t = 0; t < mesh.n_elements(); ++t)
    elem_k[t] = local_stiffness(mesh, t, sigma);

  const auto& z = mesh.layout.contact_impedance;
  const double invL = L > 0 ? 1.0 / L : 0.0;

#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 0; i < n; ++i) {
    for (int t : star[i]) {
      const Element& e = mesh.elements[t];
      int li = 0;
      while (e.v[li] != i) ++li;
      for (int j = 0; j < 3; ++j)
        A.at(i, e.v[j]) += elem_k[t][3 * li + j];
    }
    for (int f : vertex_efaces[i]) {
      const Face& face = mesh.faces[f];
      const int l = face.electrode;
      const double h = mesh.face_length(f);
      const double zinv = 1.0 / z[l];
      // Edge mass (h/6) [[2,1],[1,2]] and edge load h/2 per endpoint.
      const int other = face.v[0] == i ? face.v[1] : face.v[0];
      A.at(i, i) += zinv * h / 3.0;
      A.at(i, other) += zinv * h / 6.0;
      // Coupling -z_l^{-1} int phi_i against the voltage basis column j.
      const double load = zinv * h / 2.0;
      for (int j = 0; j < nv_dofs; ++j) {
        const double bj = (l == j ? 1.0 : 0.0) - invL;
        A.at(i, n + j) += -load * bj;
      }
    }
  }

  // Voltage block B^t diag(z_l^{-1} |e_l|) B plus the transposed coupling.
  std::vector<double> electrode_len(L, 0.0);
  for (int f : electrode_faces)
    electrode_len[mesh.faces[f].electrode] += mesh.face_length(f);
  for (int j = 0; j < nv_dofs; ++j) {
    for (int k = 0; k < nv_dofs; ++k) {
      double s = 0.0;
      for (int l = 0; l < L; ++l) {
        const double bj = (l == j ? 1.0 : 0.0) - invL;
        const double bk = (l == k ? 1.0 : 0.0) - invL;
        s += electrode_len[l] / z[l] * bj * bk;
      }
      A.at(n + j, n + k) += s;
    }
    for (int i = 0; i < n; ++i)
      if (!vertex_efaces[i].empty()) A.at(n + j, i) = A.get(i, n + j);
  }
  return sys;
}

std::vector<double> CemSystem::rhs_from_current(
    const std::vector<double>& I) const {
  if (static_cast<int>(I.size()) != n_electrodes_)
    throw std::invalid_argument("current pattern length mismatch");
  const double tol = 1e-12 * std::max(vec_max_abs(I), 1.0);
  if (std::abs(vec_sum(I)) > tol)
    throw std::invalid_argument("current pattern must sum to zero");
  std::vector<double> rhs(dim(), 0.0);
  // <I, B V^> = (B^t I)_j = I_j for zero-sum I.
  for (int j = 0; j < n_electrodes_ - 1; ++j) rhs[n_nodes_ + j] = I[j];
  return rhs;
}

std::vector<double> CemSystem::rhs_from_residual(std::vector<double> d) const {
  if (static_cast<int>(d.size()) != n_electrodes_)
    throw std::invalid_argument("residual length mismatch");
  const double scale = std::max(vec_max_abs(d), 1.0);
  if (std::abs(vec_sum(d)) > 1e-8 * scale)
    throw std::invalid_argument("adjoint data is far from zero-sum");
  project_sum_zero(d);
  return rhs_from_current(d);
}

std::vector<double> CemSystem::rhs_from_nodal(const NodalField& dual) const {
  if (static_cast<int>(dual.size()) != n_nodes_)
    throw std::invalid_argument("nodal dual length mismatch");
  std::vector<double> rhs(dim(), 0.0);
  std::copy(dual.begin(), dual.end(), rhs.begin());
  return rhs;
}

StateSolution CemSystem::expand(const std::vector<double>& x) const {
  StateSolution s;
  s.u.assign(x.begin(), x.begin() + n_nodes_);
  s.voltages.values.assign(n_electrodes_, 0.0);
  double mean = 0.0;
  for (int j = 0; j < n_electrodes_ - 1; ++j) mean += x[n_nodes_ + j];
  mean /= std::max(n_electrodes_, 1);
  for (int j = 0; j < n_electrodes_ - 1; ++j)
    s.voltages.values[j] = x[n_nodes_ + j] - mean;
  if (n_electrodes_ > 0) s.voltages.values[n_electrodes_ - 1] = -mean;
  return s;
}

SolveReport CemSystem::solve(const std::vector<double>& rhs,
                             StateSolution& out, double relative_tolerance,
                             int max_iterations) const {
  if (max_iterations <= 0) max_iterations = 10 * dim();
  std::vector<double> x(dim(), 0.0);
  const CgResult cg =
      pcg_jacobi(matrix_, rhs, x, relative_tolerance, max_iterations);
  out = expand(x);
  return {cg.converged, cg.iterations, cg.relative_residual};
}

SolveReport CemSystem::solve_forward(const CurrentPattern& I,
                                     StateSolution& out,
                                     double relative_tolerance) const {
  return solve(rhs_from_current(I.values), out, relative_tolerance);
}

SolveReport CemSystem::solve_adjoint(const ElectrodeVoltages& residual,
                                     AdjointSolution& out,
                                     double relative_tolerance) const {
  return solve(rhs_from_residual(residual.values), out, relative_tolerance);
}

struct CemFactor::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

CemFactor::CemFactor(const CemSystem& system)
    : system_(&system), impl_(std::make_unique<Impl>()) {
  const CsrMatrix& A = system.matrix();
  Eigen::SparseMatrix<double> M(A.n, A.n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(A.val.size());
  for (int i = 0; i < A.n; ++i)
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
      trip.emplace_back(i, A.col[k], A.val[k]);
  M.setFromTriplets(trip.begin(), trip.end());
  impl_->ldlt.compute(M);
  if (impl_->ldlt.info() != Eigen::Success)
    throw std::runtime_error("CEM factorization failed");
}

CemFactor::~CemFactor() = default;
CemFactor::CemFactor(CemFactor&&) noexcept = default;
CemFactor& CemFactor::operator=(CemFactor&&) noexcept = default;

std::vector<double> CemFactor::solve_reduced(
    const std::vector<double>& rhs) const {
  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(
      rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  Eigen::VectorXd x = impl_->ldlt.solve(b);
  return std::vector<double>(x.data(), x.data() + x.size());
}

StateSolution CemFactor::solve(const std::vector<double>& rhs) const {
  return system_->expand(solve_reduced(rhs));
}

double h_norm(const Mesh& mesh, const StateSolution& s) {
  double acc = 0.0;
  for (int t = 0; t < mesh.n_elements(); ++t) {
    const Element& e = mesh.elements[t];
    const double area = mesh.element_area(t);
    const auto g = mesh.field_gradient(t, s.u);
    acc += area * (g[0] * g[0] + g[1] * g[1]);
    // Exact P1 mass: (|T|/12) (sum of values)^2-style expansion.
    const double a = s.u[e.v[0]], b = s.u[e.v[1]], c = s.u[e.v[2]];
    acc += area / 6.0 * (a * a + b * b + c * c + a * b + b * c + a * c);
  }
  for (double v : s.voltages.values) acc += v * v;
  return acc;
}

StabilityReport stability_check(const Mesh& mesh, const StateSolution& state,
                                const AdjointSolution& adjoint,
                                const std::vector<double>& I,
                                const std::vector<double>& data) {
  StabilityReport r;
  r.solution_norm = std::sqrt(h_norm(mesh, state)) + std::sqrt(h_norm(mesh, adjoint));
  r.data_norm = vec_norm(I) + vec_norm(data);
  r.ratio = r.data_norm > 0.0 ? r.solution_norm / r.data_norm : 0.0;
  return r;
}

}  // namespace eit
