#ifndef EIT_MARKING_HPP
#define EIT_MARKING_HPP

#include <vector>

#include "eit/estimators.hpp"

namespace eit {

struct MarkingResult {
  std::vector<int> m1, m2, m3;  // sorted element ids
  std::vector<int> all;         // m1 ∪ m2 ∪ m3, sorted
};

// Minimal set S (sorted ids) with sum_S value >= theta * sum(value).
// Descending value order with ties broken by lower id, so the argmax is
// always included and runs are reproducible. All-zero input gives the
// empty set. Throws std::invalid_argument unless 0 < theta <= 1.
std::vector<int> dorfler_mark(const std::vector<double>& values, double theta);

// Separate marking: Dörfler per indicator, refine the union.
MarkingResult mark_all(const IndicatorTable& table, double theta);

}  // namespace eit

#endif
