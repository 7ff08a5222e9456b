#include "eit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace eit {

namespace {

constexpr double kGeomTol = 1e-10;

uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b);
}

double signed_area(const Vertex& a, const Vertex& b, const Vertex& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

}  // namespace

ElectrodeLayout uniform_layout(const Rect& domain, int L, double length,
                               double offset, double impedance) {
  const double P = domain.perimeter();
  if (L > 0 && length * L >= P)
    throw std::invalid_argument("electrodes do not fit on the boundary");
  ElectrodeLayout layout;
  for (int l = 0; l < L; ++l) {
    const double s0 = offset + l * P / L;
    if (s0 < 0.0 || s0 + length > P)
      throw std::invalid_argument("electrode segment leaves the boundary");
    layout.segments.push_back({s0, s0 + length});
    layout.contact_impedance.push_back(impedance);
  }
  return layout;
}

double Mesh::element_area(int t) const {
  const Element& e = elements[t];
  return signed_area(vertices[e.v[0]], vertices[e.v[1]], vertices[e.v[2]]);
}

std::array<double, 6> Mesh::basis_gradients(int t) const {
  const Element& e = elements[t];
  const Vertex& p0 = vertices[e.v[0]];
  const Vertex& p1 = vertices[e.v[1]];
  const Vertex& p2 = vertices[e.v[2]];
  const double inv2A = 1.0 / (2.0 * element_area(t));
  return {(p1.y - p2.y) * inv2A, (p2.x - p1.x) * inv2A,
          (p2.y - p0.y) * inv2A, (p0.x - p2.x) * inv2A,
          (p0.y - p1.y) * inv2A, (p1.x - p0.x) * inv2A};
}

std::array<double, 2> Mesh::field_gradient(int t, const NodalField& f) const {
  const Element& e = elements[t];
  const auto g = basis_gradients(t);
  double gx = 0.0, gy = 0.0;
  for (int i = 0; i < 3; ++i) {
    gx += f[e.v[i]] * g[2 * i];
    gy += f[e.v[i]] * g[2 * i + 1];
  }
  return {gx, gy};
}

double Mesh::face_length(int f) const {
  const Face& face = faces[f];
  const Vertex& a = vertices[face.v[0]];
  const Vertex& b = vertices[face.v[1]];
  return std::hypot(b.x - a.x, b.y - a.y);
}

const std::vector<std::vector<int>>& Mesh::vertex_star() const {
  if (star_.empty()) {
    star_.assign(vertices.size(), {});
    for (int t = 0; t < n_elements(); ++t)
      for (int i = 0; i < 3; ++i) star_[elements[t].v[i]].push_back(t);
  }
  return star_;
}

double Mesh::boundary_arclength(double x, double y) const {
  const double w = domain.width(), h = domain.height();
  const double tol = kGeomTol * (w + h);
  if (std::abs(y - domain.y0) < tol) return x - domain.x0;
  if (std::abs(x - domain.x1) < tol) return w + (y - domain.y0);
  if (std::abs(y - domain.y1) < tol) return w + h + (domain.x1 - x);
  if (std::abs(x - domain.x0) < tol) return 2.0 * w + h + (domain.y1 - y);
  throw std::runtime_error("point is not on the domain boundary");
}

double Mesh::min_angle() const {
  double best = std::numeric_limits<double>::max();
  for (int t = 0; t < n_elements(); ++t) {
    const Element& e = elements[t];
    for (int i = 0; i < 3; ++i) {
      const Vertex& a = vertices[e.v[i]];
      const Vertex& b = vertices[e.v[(i + 1) % 3]];
      const Vertex& c = vertices[e.v[(i + 2) % 3]];
      const double ux = b.x - a.x, uy = b.y - a.y;
      const double vx = c.x - a.x, vy = c.y - a.y;
      const double ang = std::atan2(std::abs(ux * vy - uy * vx),
                                    ux * vx + uy * vy);
      best = std::min(best, ang);
    }
  }
  return best;
}

void Mesh::build_faces() {
  faces.clear();
  star_.clear();
  std::unordered_map<uint64_t, int> index;
  index.reserve(3 * elements.size());
  for (int t = 0; t < n_elements(); ++t) {
    const Element& e = elements[t];
    for (int i = 0; i < 3; ++i) {
      const int a = e.v[i], b = e.v[(i + 1) % 3];
      auto it = index.find(edge_key(a, b));
      if (it == index.end()) {
        Face f;
        f.v = {a, b};
        f.elems = {t, -1};
        const double dx = vertices[b].x - vertices[a].x;
        const double dy = vertices[b].y - vertices[a].y;
        const double len = std::hypot(dx, dy);
        f.nx = dy / len;
        f.ny = -dx / len;
        index.emplace(edge_key(a, b), static_cast<int>(faces.size()));
        faces.push_back(f);
      } else {
        Face& f = faces[it->second];
        if (f.elems[1] != -1)
          throw std::runtime_error("non-manifold edge in mesh");
        f.elems[1] = t;
      }
    }
  }
  // Tag boundary faces by the arclength of their midpoint. Electrode
  // endpoints coincide with mesh vertices, so a boundary face is either
  // fully inside or fully outside a segment.
  const double tol = kGeomTol * domain.perimeter();
  for (Face& f : faces) {
    if (f.elems[1] != -1) continue;
    f.kind = FaceKind::Insulated;
    const Vertex& a = vertices[f.v[0]];
    const Vertex& b = vertices[f.v[1]];
    double sm;
    try {
      sm = boundary_arclength(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    } catch (const std::runtime_error&) {
      // Faces off the rectangle outline (meshes covering only part of the
      // domain) stay insulated.
      continue;
    }
    for (int l = 0; l < layout.count(); ++l) {
      const auto& seg = layout.segments[l];
      if (sm > seg.start + tol && sm < seg.end - tol) {
        f.kind = FaceKind::Electrode;
        f.electrode = l;
        break;
      }
    }
  }
}

double mesh_size_element(const Mesh& mesh, int t) {
  const double area = mesh.element_area(t);
  if (!(area > 0.0)) throw std::runtime_error("degenerate element");
  return std::sqrt(area);
}

double mesh_size_face(const Mesh& mesh, int f) {
  const double len = mesh.face_length(f);
  if (!(len > 0.0)) throw std::runtime_error("degenerate face");
  return len;
}

std::vector<int> element_patch(const Mesh& mesh, int t) {
  if (t < 0 || t >= mesh.n_elements())
    throw std::invalid_argument("element id out of range");
  const auto& star = mesh.vertex_star();
  std::vector<int> patch;
  for (int i = 0; i < 3; ++i) {
    const auto& s = star[mesh.elements[t].v[i]];
    patch.insert(patch.end(), s.begin(), s.end());
  }
  std::sort(patch.begin(), patch.end());
  patch.erase(std::unique(patch.begin(), patch.end()), patch.end());
  return patch;
}

namespace {

void validate_layout(const Rect& domain, const ElectrodeLayout& layout) {
  const double P = domain.perimeter();
  for (int l = 0; l < layout.count(); ++l) {
    const auto& s = layout.segments[l];
    if (!(s.start >= 0.0 && s.end <= P && s.end > s.start))
      throw std::invalid_argument("invalid electrode segment");
    if (!(layout.contact_impedance[l] > 0.0))
      throw std::invalid_argument("contact impedance must be positive");
  }
  for (int i = 0; i < layout.count(); ++i)
    for (int k = i + 1; k < layout.count(); ++k) {
      const auto& a = layout.segments[i];
      const auto& b = layout.segments[k];
      if (a.start < b.end && b.start < a.end)
        throw std::invalid_argument("electrode segments overlap");
    }
}

int longest_edge(const Mesh& mesh, const Element& e) {
  int best = 0;
  double best_len = -1.0;
  for (int i = 0; i < 3; ++i) {
    const Vertex& a = mesh.vertices[e.v[i]];
    const Vertex& b = mesh.vertices[e.v[(i + 1) % 3]];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len > best_len + kGeomTol) {
      best_len = len;
      best = i;
    }
  }
  return best;
}

// Every element must touch at most one electrode (vertex contact counts).
void validate_electrode_separation(const Mesh& mesh) {
  const double tol = kGeomTol * mesh.domain.perimeter();
  std::vector<int> vertex_electrode(mesh.vertices.size(), -2);  // -2: unset
  std::vector<bool> on_boundary(mesh.vertices.size(), false);
  for (const Face& f : mesh.faces)
    if (f.elems[1] == -1)
      for (int a : f.v) on_boundary[a] = true;
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    if (!on_boundary[i]) continue;
    const double s =
        mesh.boundary_arclength(mesh.vertices[i].x, mesh.vertices[i].y);
    int tag = -1;
    for (int l = 0; l < mesh.layout.count(); ++l) {
      const auto& seg = mesh.layout.segments[l];
      const bool inside = s >= seg.start - tol && s <= seg.end + tol;
      // The start corner is shared between arclength 0 and the perimeter.
      const double P = mesh.domain.perimeter();
      const bool wrapped = s < tol && P >= seg.end - tol && P <= seg.end + tol;
      if (inside || wrapped) {
        if (tag != -1 && tag != l)
          throw std::runtime_error(
              "mesh too coarse: vertex touches two electrodes");
        tag = l;
      }
    }
    vertex_electrode[i] = tag;
  }
  for (int t = 0; t < mesh.n_elements(); ++t) {
    int tag = -1;
    for (int i = 0; i < 3; ++i) {
      const int vt = vertex_electrode[mesh.elements[t].v[i]];
      if (vt < 0) continue;
      if (tag != -1 && tag != vt)
        throw std::runtime_error(
            "mesh too coarse: element touches two electrodes");
      tag = vt;
    }
  }
}

}  // namespace

Mesh build_initial_mesh(const Rect& domain, const ElectrodeLayout& layout,
                        int n0) {
  if (n0 < 1) throw std::invalid_argument("n0 must be positive");
  validate_layout(domain, layout);

  Mesh mesh;
  mesh.domain = domain;
  mesh.layout = layout;

  const int nv = n0 + 1;
  for (int j = 0; j < nv; ++j)
    for (int i = 0; i < nv; ++i)
      mesh.vertices.push_back({domain.x0 + domain.width() * i / n0,
                               domain.y0 + domain.height() * j / n0});
  for (int i = 0; i < mesh.n_vertices(); ++i)
    mesh.vertex_parents.push_back({i, i});

  auto vid = [nv](int i, int j) { return j * nv + i; };
  for (int j = 0; j < n0; ++j)
    for (int i = 0; i < n0; ++i) {
      // Corner cells take the diagonal through the domain corner so no
      // element has three boundary vertices straddling a corner.
      const bool flip = (i == n0 - 1 && j == 0) || (i == 0 && j == n0 - 1);
      Element lower;  // below the cell diagonal
      Element upper;
      if (flip) {
        lower.v = {vid(i, j), vid(i + 1, j), vid(i, j + 1)};
        upper.v = {vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)};
      } else {
        lower.v = {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)};
        upper.v = {vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)};
      }
      lower.parent = static_cast<int>(mesh.elements.size());
      mesh.elements.push_back(lower);
      upper.parent = static_cast<int>(mesh.elements.size());
      mesh.elements.push_back(upper);
    }
  for (Element& e : mesh.elements) e.refinement_edge = longest_edge(mesh, e);

  mesh.build_faces();

  // Electrode endpoints must land on mesh vertices; otherwise the face tags
  // would split an electrode mid-face.
  const double tol = kGeomTol * domain.perimeter();
  const double hx = domain.width() / n0, hy = domain.height() / n0;
  for (const auto& seg : layout.segments)
    for (double s : {seg.start, seg.end}) {
      // Arclength of the nearest structured boundary vertex.
      const double w = domain.width(), h = domain.height();
      double local, step;
      if (s <= w) {
        local = s;
        step = hx;
      } else if (s <= w + h) {
        local = s - w;
        step = hy;
      } else if (s <= 2 * w + h) {
        local = s - w - h;
        step = hx;
      } else {
        local = s - 2 * w - h;
        step = hy;
      }
      if (std::abs(local / step - std::round(local / step)) > 1e-9)
        throw std::runtime_error(
            "n0 too coarse: electrode endpoint not on a mesh vertex");
    }

  validate_electrode_separation(mesh);
  return mesh;
}

namespace {

// Scratch structure for newest vertex bisection with conforming closure.
struct Refiner {
  const Mesh& in;
  std::vector<Vertex> verts;
  std::vector<std::array<int, 2>> vertex_parents;

  struct Tri {
    std::array<int, 3> v;
    int ref_edge;
    int generation;
    int ancestor;  // element id in the input mesh
    bool alive = true;
  };
  std::vector<Tri> tris;
  // Alive elements adjacent to each edge (at most 2).
  std::unordered_map<uint64_t, std::array<int, 2>> edge_elems;
  std::unordered_map<uint64_t, int> midpoint;

  explicit Refiner(const Mesh& mesh)
      : in(mesh), verts(mesh.vertices), vertex_parents(mesh.vertex_parents) {
    tris.reserve(2 * mesh.elements.size());
    for (int t = 0; t < mesh.n_elements(); ++t) {
      const Element& e = mesh.elements[t];
      tris.push_back({e.v, e.refinement_edge, e.generation, t, true});
      for (int i = 0; i < 3; ++i) attach(t, e.v[i], e.v[(i + 1) % 3]);
    }
  }

  void attach(int t, int a, int b) {
    auto [it, inserted] = edge_elems.try_emplace(edge_key(a, b),
                                                 std::array<int, 2>{t, -1});
    if (!inserted) {
      auto& pair = it->second;
      if (pair[0] == -1)
        pair[0] = t;
      else
        pair[1] = t;
    }
  }

  void detach(int t, int a, int b) {
    auto& pair = edge_elems.at(edge_key(a, b));
    if (pair[0] == t)
      pair[0] = -1;
    else
      pair[1] = -1;
  }

  int neighbor_across(int t, int a, int b) const {
    auto it = edge_elems.find(edge_key(a, b));
    if (it == edge_elems.end()) return -1;
    const auto& pair = it->second;
    return pair[0] == t ? pair[1] : pair[0];
  }

  int midpoint_of(int a, int b) {
    auto [it, inserted] =
        midpoint.try_emplace(edge_key(a, b), static_cast<int>(verts.size()));
    if (inserted) {
      verts.push_back({0.5 * (verts[a].x + verts[b].x),
                       0.5 * (verts[a].y + verts[b].y)});
      vertex_parents.push_back({std::min(a, b), std::max(a, b)});
    }
    return it->second;
  }

  // Splits t across its refinement edge. The children's refinement edges are
  // the two parent edges opposite the new midpoint.
  void bisect(int t) {
    Tri tri = tris[t];
    tris[t].alive = false;
    for (int i = 0; i < 3; ++i) detach(t, tri.v[i], tri.v[(i + 1) % 3]);

    const int e = tri.ref_edge;
    const int a = tri.v[e], b = tri.v[(e + 1) % 3], c = tri.v[(e + 2) % 3];
    const int m = midpoint_of(a, b);

    Tri left{{a, m, c}, 2, tri.generation + 1, tri.ancestor, true};
    Tri right{{m, b, c}, 1, tri.generation + 1, tri.ancestor, true};
    for (const Tri& child : {left, right}) {
      const int id = static_cast<int>(tris.size());
      tris.push_back(child);
      for (int i = 0; i < 3; ++i)
        attach(id, child.v[i], child.v[(i + 1) % 3]);
    }
  }

  // Bisects t after recursively making the neighbor across the refinement
  // edge compatible, then bisects that neighbor too (shared midpoint keeps
  // the mesh conforming).
  void refine_element(int t) {
    if (!tris[t].alive) return;
    while (true) {
      // The closure recursion below may bisect t as somebody's neighbor.
      if (!tris[t].alive) return;
      const Tri& tri = tris[t];
      const int a = tri.v[tri.ref_edge], b = tri.v[(tri.ref_edge + 1) % 3];
      const int n = neighbor_across(t, a, b);
      if (n == -1) break;
      const Tri& ntri = tris[n];
      const int na = ntri.v[ntri.ref_edge];
      const int nb = ntri.v[(ntri.ref_edge + 1) % 3];
      if (edge_key(na, nb) == edge_key(a, b)) break;
      refine_element(n);
    }
    if (!tris[t].alive) return;
    const Tri& tri = tris[t];
    const int a = tri.v[tri.ref_edge], b = tri.v[(tri.ref_edge + 1) % 3];
    const int n = neighbor_across(t, a, b);
    bisect(t);
    if (n != -1) bisect(n);
  }
};

}  // namespace

Mesh refine(const Mesh& mesh, const std::vector<int>& marked) {
  for (int t : marked)
    if (t < 0 || t >= mesh.n_elements())
      throw std::invalid_argument("marked element id out of range");
  if (marked.empty()) return mesh;

  Refiner r(mesh);
  std::vector<int> order(marked);
  std::sort(order.begin(), order.end());
  for (int t : order) r.refine_element(t);

  Mesh out;
  out.domain = mesh.domain;
  out.layout = mesh.layout;
  out.vertices = std::move(r.verts);
  out.vertex_parents = std::move(r.vertex_parents);
  for (const auto& tri : r.tris) {
    if (!tri.alive) continue;
    Element e;
    e.v = tri.v;
    e.refinement_edge = tri.ref_edge;
    e.generation = tri.generation;
    e.parent = tri.ancestor;
    out.elements.push_back(e);
  }
  out.build_faces();
  return out;
}

Mesh uniform_refine(const Mesh& mesh) {
  std::vector<int> all(mesh.n_elements());
  for (int t = 0; t < mesh.n_elements(); ++t) all[t] = t;
  Mesh once = refine(mesh, all);
  std::vector<int> all2(once.n_elements());
  for (int t = 0; t < once.n_elements(); ++t) all2[t] = t;
  Mesh twice = refine(once, all2);
  // Collapse the two-step parent chain so parents refer to the input mesh.
  for (Element& e : twice.elements) e.parent = once.elements[e.parent].parent;
  return twice;
}

std::string dump_mesh_json(const Mesh& mesh) {
  nlohmann::json j;
  j["domain"] = {mesh.domain.x0, mesh.domain.y0, mesh.domain.x1,
                 mesh.domain.y1};
  auto& layout = j["layout"];
  layout["segments"] = nlohmann::json::array();
  for (const auto& s : mesh.layout.segments)
    layout["segments"].push_back({s.start, s.end});
  layout["contact_impedance"] = mesh.layout.contact_impedance;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices) j["vertices"].push_back({v.x, v.y});
  j["elements"] = nlohmann::json::array();
  for (const auto& e : mesh.elements)
    j["elements"].push_back(
        {e.v[0], e.v[1], e.v[2], e.refinement_edge, e.generation, e.parent});
  j["vertex_parents"] = nlohmann::json::array();
  for (const auto& p : mesh.vertex_parents)
    j["vertex_parents"].push_back({p[0], p[1]});
  j["faces"] = nlohmann::json::array();
  for (const auto& f : mesh.faces)
    j["faces"].push_back({f.v[0], f.v[1], static_cast<int>(f.kind),
                          f.electrode, f.elems[0], f.elems[1]});
  return j.dump();
}

Mesh load_mesh_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Mesh mesh;
  mesh.domain = {j["domain"][0], j["domain"][1], j["domain"][2],
                 j["domain"][3]};
  for (const auto& s : j["layout"]["segments"])
    mesh.layout.segments.push_back({s[0], s[1]});
  mesh.layout.contact_impedance =
      j["layout"]["contact_impedance"].get<std::vector<double>>();
  for (const auto& v : j["vertices"])
    mesh.vertices.push_back({v[0], v[1]});
  for (const auto& e : j["elements"]) {
    Element el;
    el.v = {e[0], e[1], e[2]};
    el.refinement_edge = e[3];
    el.generation = e[4];
    el.parent = e[5];
    mesh.elements.push_back(el);
  }
  for (const auto& p : j["vertex_parents"])
    mesh.vertex_parents.push_back({p[0], p[1]});
  mesh.build_faces();
  return mesh;
}

}  // namespace eit
