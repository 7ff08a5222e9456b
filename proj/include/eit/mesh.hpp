#ifndef EIT_MESH_HPP
#define EIT_MESH_HPP

#include <array>
#include <string>
#include <vector>

#include "eit/types.hpp"

namespace eit {

// Axis-aligned rectangular domain. All experiments run on (-1,1)^2 but the
// mesh machinery works for any rectangle.
struct Rect {
  double x0 = -1.0, y0 = -1.0, x1 = 1.0, y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double perimeter() const { return 2.0 * (width() + height()); }
};

struct Vertex {
  double x = 0.0, y = 0.0;
};

// Triangle with counterclockwise vertex order. Local edge i connects
// vertices (i, i+1 mod 3); refinement_edge is the edge bisected next
// (newest vertex bisection bookkeeping).
struct Element {
  std::array<int, 3> v{};
  int refinement_edge = 0;
  int generation = 0;
  // Id of the element in the mesh this mesh was refined from that contains
  // this element; equals the own id on an initial mesh.
  int parent = -1;
};

enum class FaceKind { Interior, Electrode, Insulated };

struct Face {
  std::array<int, 2> v{};
  FaceKind kind = FaceKind::Interior;
  int electrode = -1;  // electrode index when kind == Electrode
  // Adjacent element ids; elems[1] == -1 on the boundary. The unit normal
  // points from elems[0] to elems[1], outward on the boundary.
  std::array<int, 2> elems{-1, -1};
  double nx = 0.0, ny = 0.0;
};

// Disjoint boundary arcs carrying the electrodes, parameterized by arclength
// along the rectangle boundary (counterclockwise from the (x0,y0) corner),
// plus one contact impedance per electrode.
struct ElectrodeLayout {
  struct Segment {
    double start = 0.0, end = 0.0;
  };
  std::vector<Segment> segments;
  std::vector<double> contact_impedance;
  int count() const { return static_cast<int>(segments.size()); }
};

// L electrodes of the given length evenly spaced along the rectangle
// boundary. Electrode l starts at arclength offset + l * perimeter / L.
ElectrodeLayout uniform_layout(const Rect& domain, int L, double length,
                               double offset, double impedance = 1.0);

class Mesh {
 public:
  Rect domain;
  ElectrodeLayout layout;
  std::vector<Vertex> vertices;
  std::vector<Element> elements;
  std::vector<Face> faces;
  // Midpoint lineage: vertex i was created as the midpoint of vertices
  // vertex_parents[i]; initial-mesh vertices carry {i, i}. Parents always
  // have smaller indices, so one forward sweep transfers a nodal field from
  // any ancestor mesh (see interp.hpp).
  std::vector<std::array<int, 2>> vertex_parents;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_elements() const { return static_cast<int>(elements.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }

  double element_area(int t) const;
  // Gradients of the three P1 basis functions on element t, as
  // {dx0,dy0,dx1,dy1,dx2,dy2}.
  std::array<double, 6> basis_gradients(int t) const;
  // Gradient of a P1 field on element t.
  std::array<double, 2> field_gradient(int t, const NodalField& f) const;
  double face_length(int f) const;

  // Elements incident to each vertex, in ascending element order.
  const std::vector<std::vector<int>>& vertex_star() const;

  // Arclength of a boundary point, counterclockwise from (x0,y0).
  double boundary_arclength(double x, double y) const;

  double min_angle() const;

  // Rebuilds the face table (with electrode tags) from the element list.
  void build_faces();

 private:
  mutable std::vector<std::vector<int>> star_;
};

// h_T = sqrt(area) for elements, h_F = length for faces.
double mesh_size_element(const Mesh& mesh, int t);
double mesh_size_face(const Mesh& mesh, int f);

// All elements sharing at least one vertex with t, including t itself.
std::vector<int> element_patch(const Mesh& mesh, int t);

// Structured n0 x n0 triangulation of the domain with electrode-tagged
// boundary faces. Initial refinement edges are the longest edges. Throws
// std::invalid_argument for overlapping layouts and std::runtime_error when
// n0 cannot resolve the electrode endpoints.
Mesh build_initial_mesh(const Rect& domain, const ElectrodeLayout& layout,
                        int n0);

// Newest vertex bisection of every marked element, with conforming closure.
// The result is nested in the input; vertex ids of the input are preserved.
Mesh refine(const Mesh& mesh, const std::vector<int>& marked);

// One uniform loop: every element of the input ends up fully subdivided
// (two mark-all bisection passes), so d.o.f. roughly quadruple.
Mesh uniform_refine(const Mesh& mesh);

// Deterministic plain-text JSON dump (tables sorted by id).
std::string dump_mesh_json(const Mesh& mesh);
Mesh load_mesh_json(const std::string& text);

}  // namespace eit

#endif
