#ifndef EIT_QUADRATURE_HPP
#define EIT_QUADRATURE_HPP

#include <array>
#include <cstddef>

namespace eit {

// Quadrature point in barycentric coordinates with a weight that sums to 1
// over the rule (multiply by the element measure).
struct BaryPoint {
  double l0, l1, l2;
  double w;
};

// 6-point rule, exact for polynomials of degree 4 on a triangle.
inline const std::array<BaryPoint, 6>& tri_rule_deg4() {
  static const std::array<BaryPoint, 6> rule = [] {
    const double a1 = 0.816847572980459, b1 = 0.091576213509771;
    const double a2 = 0.108103018168070, b2 = 0.445948490915965;
    const double w1 = 0.109951743655322, w2 = 0.223381589678011;
    return std::array<BaryPoint, 6>{{
        {a1, b1, b1, w1}, {b1, a1, b1, w1}, {b1, b1, a1, w1},
        {a2, b2, b2, w2}, {b2, a2, b2, w2}, {b2, b2, a2, w2},
    }};
  }();
  return rule;
}

// 12-point rule, exact for polynomials of degree 6 on a triangle.
inline const std::array<BaryPoint, 12>& tri_rule_deg6() {
  static const std::array<BaryPoint, 12> rule = [] {
    const double a1 = 0.873821971016996, b1 = 0.063089014491502;
    const double w1 = 0.050844906370207;
    const double a2 = 0.501426509658179, b2 = 0.249286745170910;
    const double w2 = 0.116786275726379;
    const double a3 = 0.636502499121399, b3 = 0.310352451033785,
                 c3 = 0.053145049844816;
    const double w3 = 0.082851075618374;
    return std::array<BaryPoint, 12>{{
        {a1, b1, b1, w1}, {b1, a1, b1, w1}, {b1, b1, a1, w1},
        {a2, b2, b2, w2}, {b2, a2, b2, w2}, {b2, b2, a2, w2},
        {a3, b3, c3, w3}, {a3, c3, b3, w3}, {b3, a3, c3, w3},
        {b3, c3, a3, w3}, {c3, a3, b3, w3}, {c3, b3, a3, w3},
    }};
  }();
  return rule;
}

// 2-point Gauss rule on [0,1], exact for cubics. Returns {point, weight}.
inline const std::array<std::array<double, 2>, 2>& segment_rule_2pt() {
  static const std::array<std::array<double, 2>, 2> rule = [] {
    const double d = 0.28867513459481287;  // 1/(2*sqrt(3))
    return std::array<std::array<double, 2>, 2>{{
        {0.5 - d, 0.5}, {0.5 + d, 0.5},
    }};
  }();
  return rule;
}

}  // namespace eit

#endif
