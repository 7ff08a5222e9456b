#ifndef EIT_CEM_HPP
#define EIT_CEM_HPP

#include <memory>
#include <vector>

#include "eit/mesh.hpp"
#include "eit/sparse.hpp"
#include "eit/types.hpp"

namespace eit {

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
};

// Assembled complete-electrode-model operator on V_T x R^L_diamond:
// (sigma grad u, grad v) + sum_l z_l^{-1} (u - U_l, v - V_l)_{L2(e_l)}.
// The zero-sum voltage constraint is eliminated with the explicit basis
// b_j = e_j - (1/L) 1, j = 0..L-2, which keeps the reduced system SPD.
class CemSystem {
 public:
  // Element-parallel assembly. sigma is a P1 nodal field; element stiffness
  // uses the element mean of sigma (exact for P1 coefficients).
  static CemSystem assemble(const Mesh& mesh, const NodalField& sigma);
  // Single-threaded reference assembly, kept for kernel verification.
  static CemSystem assemble_serial(const Mesh& mesh, const NodalField& sigma);

  const Mesh& mesh() const { return *mesh_; }
  const CsrMatrix& matrix() const { return matrix_; }
  int n_nodes() const { return n_nodes_; }
  int n_electrodes() const { return n_electrodes_; }
  int dim() const { return matrix_.n; }

  // Reduced right-hand sides. rhs_from_current requires a zero-sum pattern
  // (1e-12 relative); rhs_from_residual projects small sum defects and
  // throws on large ones.
  std::vector<double> rhs_from_current(const std::vector<double>& I) const;
  std::vector<double> rhs_from_residual(std::vector<double> d) const;
  std::vector<double> rhs_from_nodal(const NodalField& dual) const;

  // Maps a reduced coefficient vector back to (u, U) with zero-sum U.
  StateSolution expand(const std::vector<double>& x) const;

  // Jacobi-preconditioned CG. max_iterations <= 0 means 10 * dim.
  SolveReport solve(const std::vector<double>& rhs, StateSolution& out,
                    double relative_tolerance = 1e-10,
                    int max_iterations = -1) const;
  SolveReport solve_forward(const CurrentPattern& I, StateSolution& out,
                            double relative_tolerance = 1e-10) const;
  SolveReport solve_adjoint(const ElectrodeVoltages& residual,
                            AdjointSolution& out,
                            double relative_tolerance = 1e-10) const;

 private:
  static CemSystem assemble_impl(const Mesh& mesh, const NodalField& sigma,
                                 bool parallel);
  const Mesh* mesh_ = nullptr;
  CsrMatrix matrix_;
  int n_nodes_ = 0;
  int n_electrodes_ = 0;
};

// Sparse direct factorization of a CemSystem, for the many right-hand
// sides of the Gauss-Newton inner iteration.
class CemFactor {
 public:
  explicit CemFactor(const CemSystem& system);
  ~CemFactor();
  CemFactor(CemFactor&&) noexcept;
  CemFactor& operator=(CemFactor&&) noexcept;

  std::vector<double> solve_reduced(const std::vector<double>& rhs) const;
  StateSolution solve(const std::vector<double>& rhs) const;

 private:
  struct Impl;
  const CemSystem* system_;
  std::unique_ptr<Impl> impl_;
};

// ||u||_{H1(Omega)}^2 + ||U||^2 of a solution pair.
double h_norm(const Mesh& mesh, const StateSolution& s);

struct StabilityReport {
  double solution_norm = 0.0;  // ||(u,U)||_H + ||(p,P)||_H
  double data_norm = 0.0;      // ||I|| + ||U^delta||
  double ratio = 0.0;
};

// Both sides of the discrete stability bound for a state/adjoint pair from
// the same conductivity; test utility.
StabilityReport stability_check(const Mesh& mesh, const StateSolution& state,
                                const AdjointSolution& adjoint,
                                const std::vector<double>& I,
                                const std::vector<double>& data);

}  // namespace eit

#endif
