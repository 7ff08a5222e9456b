#include "eit/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eit {

CsrMatrix CsrMatrix::from_pattern(const std::vector<std::vector<int>>& adj) {
  CsrMatrix m;
  m.n = static_cast<int>(adj.size());
  m.row_ptr.assign(m.n + 1, 0);
  std::vector<std::vector<int>> rows(adj);
  for (int i = 0; i < m.n; ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    m.row_ptr[i + 1] = m.row_ptr[i] + static_cast<int>(r.size());
  }
  m.col.reserve(m.row_ptr[m.n]);
  for (const auto& r : rows) m.col.insert(m.col.end(), r.begin(), r.end());
  m.val.assign(m.col.size(), 0.0);
  return m;
}

int CsrMatrix::entry_index(int i, int j) const {
  const auto begin = col.begin() + row_ptr[i];
  const auto end = col.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j)
    throw std::out_of_range("entry not in sparsity pattern");
  return static_cast<int>(it - col.begin());
}

void CsrMatrix::multiply(const std::vector<double>& x,
                         std::vector<double>& y) const {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
}

void CsrMatrix::multiply_serial(const std::vector<double>& x,
                                std::vector<double>& y) const {
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      if (col[k] == i) d[i] = val[k];
  return d;
}

CgResult pcg(const LinearOperator& apply, const LinearOperator& precond,
             const std::vector<double>& b, std::vector<double>& x,
             double relative_tolerance, int max_iterations) {
  const int n = static_cast<int>(b.size());
  std::vector<double> r(n), z(n), p(n), q(n);

  apply(x, r);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];

  auto norm = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double t : v) s += t * t;
    return std::sqrt(s);
  };
  const double b_norm = norm(b);
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {true, 0, 0.0};
  }

  precond(r, z);
  p = z;
  double rz = 0.0;
  for (int i = 0; i < n; ++i) rz += r[i] * z[i];

  std::vector<double> best_x(x);
  double best_res = norm(r) / b_norm;
  CgResult result{false, 0, best_res};
  if (best_res <= relative_tolerance) {
    result.converged = true;
    return result;
  }

  for (int it = 1; it <= max_iterations; ++it) {
    apply(p, q);
    double pq = 0.0;
    for (int i = 0; i < n; ++i) pq += p[i] * q[i];
    if (pq <= 0.0) break;  // operator not SPD on this subspace
    const double alpha = rz / pq;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    const double res = norm(r) / b_norm;
    result.iterations = it;
    result.relative_residual = res;
    if (res < best_res) {
      best_res = res;
      best_x = x;
    }
    if (res <= relative_tolerance) {
      result.converged = true;
      return result;
    }
    precond(r, z);
    double rz_new = 0.0;
    for (int i = 0; i < n; ++i) rz_new += r[i] * z[i];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  x = best_x;
  result.relative_residual = best_res;
  return result;
}

CgResult pcg_jacobi(const CsrMatrix& A, const std::vector<double>& b,
                    std::vector<double>& x, double relative_tolerance,
                    int max_iterations) {
  std::vector<double> inv_diag = A.diagonal();
  for (double& d : inv_diag) d = (d != 0.0) ? 1.0 / d : 1.0;
  auto apply = [&A](const std::vector<double>& in, std::vector<double>& out) {
    A.multiply(in, out);
  };
  auto precond = [&inv_diag](const std::vector<double>& in,
                             std::vector<double>& out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = inv_diag[i] * in[i];
  };
  return pcg(apply, precond, b, x, relative_tolerance, max_iterations);
}

}  // namespace eit
