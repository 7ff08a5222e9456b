#ifndef EIT_SPARSE_HPP
#define EIT_SPARSE_HPP

#include <functional>
#include <vector>

namespace eit {

// Compressed sparse row matrix with a fixed symmetric pattern.
struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  // Builds the pattern from an adjacency list (columns per row, need not be
  // sorted or unique); values start at zero.
  static CsrMatrix from_pattern(const std::vector<std::vector<int>>& adj);

  // Index into val for entry (i, j); throws if (i, j) is not in the pattern.
  int entry_index(int i, int j) const;
  double& at(int i, int j) { return val[entry_index(i, j)]; }
  double get(int i, int j) const { return val[entry_index(i, j)]; }

  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  void multiply_serial(const std::vector<double>& x,
                       std::vector<double>& y) const;
  std::vector<double> diagonal() const;
};

struct CgResult {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
};

using LinearOperator =
    std::function<void(const std::vector<double>&, std::vector<double>&)>;

// Preconditioned conjugate gradients for an SPD operator. precond applies an
// approximate inverse; pass the identity for plain CG. On stagnation the
// best iterate found is left in x and converged is false.
CgResult pcg(const LinearOperator& apply, const LinearOperator& precond,
             const std::vector<double>& b, std::vector<double>& x,
             double relative_tolerance, int max_iterations);

// CG with the Jacobi (diagonal) preconditioner.
CgResult pcg_jacobi(const CsrMatrix& A, const std::vector<double>& b,
                    std::vector<double>& x, double relative_tolerance,
                    int max_iterations);

}  // namespace eit

#endif
