#include "eit/marking.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace eit {

std::vector<int> dorfler_mark(const std::vector<double>& values,
                              double theta) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::invalid_argument("dorfler_mark: theta must be in (0, 1]");
  for (double v : values)
    if (v < 0.0)
      throw std::invalid_argument("dorfler_mark: negative indicator");
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  if (total == 0.0) return {};

  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return values[a] > values[b];  // stable: ties keep lower id first
  });

  std::vector<int> marked;
  double sum = 0.0;
  for (int id : order) {
    marked.push_back(id);
    sum += values[id];
    if (sum >= theta * total) break;
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

MarkingResult mark_all(const IndicatorTable& table, double theta) {
  MarkingResult r;
  r.m1 = dorfler_mark(table.eta1_sq, theta);
  r.m2 = dorfler_mark(table.eta2_sq, theta);
  r.m3 = dorfler_mark(table.eta3_q, theta);
  std::vector<int> u;
  std::set_union(r.m1.begin(), r.m1.end(), r.m2.begin(), r.m2.end(),
                 std::back_inserter(u));
  r.all.clear();
  std::set_union(u.begin(), u.end(), r.m3.begin(), r.m3.end(),
                 std::back_inserter(r.all));
  return r;
}

}  // namespace eit
