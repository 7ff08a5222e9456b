#ifndef EIT_INTERP_HPP
#define EIT_INTERP_HPP

#include <functional>
#include <vector>

#include "eit/mesh.hpp"
#include "eit/types.hpp"

namespace eit {

// Transfers a nodal field from an ancestor mesh to a mesh refined from it,
// by walking the midpoint lineage. Exact for P1 fields (nested spaces).
// Throws std::invalid_argument when the field cannot have come from an
// ancestor of fine.
NodalField lagrange_interp(const NodalField& coarse, const Mesh& fine);

// Nodal evaluation of a function on a mesh.
NodalField lagrange_interp(const std::function<double(double, double)>& v,
                           const Mesh& mesh);

// True for vertices lying on a boundary face.
std::vector<bool> boundary_vertices(const Mesh& mesh);

// Averaging quasi-interpolant: interior node x gets the mean of v over its
// element star, boundary nodes get 0. Preserves constants at interior nodes
// and, for c0 <= v <= c1, keeps interior values inside [c0, c1].
NodalField quasi_interp(const NodalField& v, const Mesh& mesh);
NodalField quasi_interp(const std::function<double(double, double)>& v,
                        const Mesh& mesh);

}  // namespace eit

#endif
