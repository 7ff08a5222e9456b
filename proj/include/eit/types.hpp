#ifndef EIT_TYPES_HPP
#define EIT_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace eit {

// Coefficients of a continuous piecewise-linear (P1) function, one value per
// mesh vertex.
using NodalField = std::vector<double>;

// Applied electrode currents. Valid patterns have zero sum.
struct CurrentPattern {
  std::vector<double> values;
};

// Electrode voltages, normalized to zero sum.
struct ElectrodeVoltages {
  std::vector<double> values;
};

// Interior potential plus electrode voltages of one forward (or adjoint)
// solve.
struct StateSolution {
  NodalField u;
  ElectrodeVoltages voltages;
};
using AdjointSolution = StateSolution;

inline double vec_sum(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0);
}

inline double vec_max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double vec_dot(const std::vector<double>& a,
                      const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Removes the mean so the vector lies in the zero-sum subspace.
inline void project_sum_zero(std::vector<double>& v) {
  if (v.empty()) return;
  const double mean = vec_sum(v) / static_cast<double>(v.size());
  for (double& x : v) x -= mean;
}

}  // namespace eit

#endif
