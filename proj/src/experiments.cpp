#include "eit/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "eit/cem.hpp"
#include "eit/estimators.hpp"
#include "eit/interp.hpp"
#include "eit/marking.hpp"

namespace eit {

double PhantomSpec::evaluate(double x, double y) const {
  double v = background;
  for (const auto& c : circles) {
    const double dx = x - c.cx;
    const double dy = y - c.cy;
    if (dx * dx + dy * dy < c.radius * c.radius) v += c.amplitude;
  }
  for (const auto& b : bumps) {
    const double dx = x - b.cx;
    const double dy = y - b.cy;
    v += b.amplitude * std::exp(-b.width * (dx * dx + dy * dy) / 2.0);
  }
  return v;
}

NodalField PhantomSpec::project(const Mesh& mesh) const {
  NodalField f(mesh.n_vertices());
  for (int i = 0; i < mesh.n_vertices(); ++i)
    f[i] = evaluate(mesh.vertices[i].x, mesh.vertices[i].y);
  return f;
}

PhantomSpec load_phantom_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  PhantomSpec p;
  p.background = j.value("background", 1.0);
  for (const auto& c : j.value("circles", nlohmann::json::array()))
    p.circles.push_back({c.at("cx"), c.at("cy"), c.at("radius"),
                         c.at("amplitude")});
  for (const auto& b : j.value("bumps", nlohmann::json::array()))
    p.bumps.push_back({b.at("cx"), b.at("cy"), b.at("width"),
                       b.at("amplitude")});
  return p;
}

std::string dump_phantom_json(const PhantomSpec& phantom) {
  nlohmann::json j;
  j["background"] = phantom.background;
  j["circles"] = nlohmann::json::array();
  for (const auto& c : phantom.circles)
    j["circles"].push_back({{"cx", c.cx}, {"cy", c.cy},
                            {"radius", c.radius}, {"amplitude", c.amplitude}});
  j["bumps"] = nlohmann::json::array();
  for (const auto& b : phantom.bumps)
    j["bumps"].push_back({{"cx", b.cx}, {"cy", b.cy},
                          {"width", b.width}, {"amplitude", b.amplitude}});
  return j.dump(2) + "\n";
}

PhantomSpec two_disk_phantom() {
  PhantomSpec p;
  p.background = 1.0;
  p.circles = {{0.0, 0.5, 0.3, 1.0}, {0.0, -0.5, 0.3, 1.0}};
  return p;
}

ElectrodeLayout RunConfig::layout() const {
  return uniform_layout(domain, electrode_count, electrode_length,
                        electrode_offset, contact_impedance);
}

Mesh RunConfig::initial_mesh() const {
  return build_initial_mesh(domain, layout(), n0);
}

Mesh RunConfig::data_mesh() const {
  Mesh m = initial_mesh();
  for (int i = 0; i < data_refinements; ++i) m = uniform_refine(m);
  return m;
}

GaussNewtonOptions RunConfig::optimizer_options() const {
  GaussNewtonOptions o;
  o.reg = reg;
  o.inner_tolerance = inner_tolerance;
  o.inner_max_iterations = inner_max_iterations;
  o.max_outer_iterations = max_outer_iterations;
  o.step_tolerance = step_tolerance;
  o.forward_tolerance = forward_tolerance;
  return o;
}

void RunConfig::validate() const {
  if (n0 < 1) throw std::invalid_argument("config: n0 must be positive");
  if (electrode_count < 2)
    throw std::invalid_argument("config: need at least two electrodes");
  if (electrode_length <= 0.0 || contact_impedance <= 0.0)
    throw std::invalid_argument("config: electrode geometry must be positive");
  if (pattern_count < 1 || pattern_count >= electrode_count)
    throw std::invalid_argument(
        "config: pattern count must be in [1, electrode count)");
  if (max_refinements < 0)
    throw std::invalid_argument("config: max_refinements must be >= 0");
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::invalid_argument("config: theta must be in (0, 1]");
  if (q < 1.0) throw std::invalid_argument("config: q must be >= 1");
  if (reg.eps <= 0.0 || reg.alpha <= 0.0 || !(reg.c0 < reg.c1) || reg.c0 <= 0.0)
    throw std::invalid_argument("config: invalid regularization parameters");
  if (data_refinements < 0)
    throw std::invalid_argument("config: data_refinements must be >= 0");
}

namespace {

const char* mode_name(RefinementMode m) {
  return m == RefinementMode::Uniform ? "uniform" : "adaptive";
}

RefinementMode mode_from_name(const std::string& s) {
  if (s == "uniform") return RefinementMode::Uniform;
  if (s == "adaptive") return RefinementMode::Adaptive;
  throw std::invalid_argument("config: mode must be adaptive or uniform");
}

}  // namespace

RunConfig load_config_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RunConfig c;
  c.domain.x0 = j.value("x0", c.domain.x0);
  c.domain.y0 = j.value("y0", c.domain.y0);
  c.domain.x1 = j.value("x1", c.domain.x1);
  c.domain.y1 = j.value("y1", c.domain.y1);
  c.n0 = j.value("n0", c.n0);
  c.electrode_count = j.value("electrode_count", c.electrode_count);
  c.electrode_length = j.value("electrode_length", c.electrode_length);
  c.electrode_offset = j.value("electrode_offset", c.electrode_offset);
  c.contact_impedance = j.value("contact_impedance", c.contact_impedance);
  c.pattern_count = j.value("pattern_count", c.pattern_count);
  c.max_refinements = j.value("max_refinements", c.max_refinements);
  c.theta = j.value("theta", c.theta);
  c.q = j.value("q", c.q);
  c.reg.eps = j.value("eps", c.reg.eps);
  c.reg.alpha = j.value("alpha", c.reg.alpha);
  c.reg.c0 = j.value("c0", c.reg.c0);
  c.reg.c1 = j.value("c1", c.reg.c1);
  c.mode = mode_from_name(j.value("mode", std::string(mode_name(c.mode))));
  c.forward_tolerance = j.value("forward_tolerance", c.forward_tolerance);
  c.inner_tolerance = j.value("inner_tolerance", c.inner_tolerance);
  c.inner_max_iterations =
      j.value("inner_max_iterations", c.inner_max_iterations);
  c.max_outer_iterations =
      j.value("max_outer_iterations", c.max_outer_iterations);
  c.step_tolerance = j.value("step_tolerance", c.step_tolerance);
  c.data_refinements = j.value("data_refinements", c.data_refinements);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.validate();
  return c;
}

std::string dump_config_json(const RunConfig& c) {
  nlohmann::json j;
  j["x0"] = c.domain.x0;
  j["y0"] = c.domain.y0;
  j["x1"] = c.domain.x1;
  j["y1"] = c.domain.y1;
  j["n0"] = c.n0;
  j["electrode_count"] = c.electrode_count;
  j["electrode_length"] = c.electrode_length;
  j["electrode_offset"] = c.electrode_offset;
  j["contact_impedance"] = c.contact_impedance;
  j["pattern_count"] = c.pattern_count;
  j["max_refinements"] = c.max_refinements;
  j["theta"] = c.theta;
  j["q"] = c.q;
  j["eps"] = c.reg.eps;
  j["alpha"] = c.reg.alpha;
  j["c0"] = c.reg.c0;
  j["c1"] = c.reg.c1;
  j["mode"] = mode_name(c.mode);
  j["forward_tolerance"] = c.forward_tolerance;
  j["inner_tolerance"] = c.inner_tolerance;
  j["inner_max_iterations"] = c.inner_max_iterations;
  j["max_outer_iterations"] = c.max_outer_iterations;
  j["step_tolerance"] = c.step_tolerance;
  j["data_refinements"] = c.data_refinements;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

std::vector<CurrentPattern> generate_currents(int L, int count) {
  if (count < 1 || count >= L)
    throw std::invalid_argument("generate_currents: need 1 <= count < L");
  const int half = (count + 1) / 2;  // cosines first, then sines
  std::vector<CurrentPattern> out(count);
  for (int j = 1; j <= count; ++j) {
    auto& I = out[j - 1].values;
    I.resize(L);
    const int freq = j <= half ? j : j - half;
    for (int l = 0; l < L; ++l) {
      const double arg = 2.0 * M_PI * freq * l / L;
      I[l] = j <= half ? std::cos(arg) : std::sin(arg);
    }
    project_sum_zero(I);
    const double norm = vec_norm(I);
    if (norm == 0.0)
      throw std::invalid_argument("generate_currents: degenerate pattern");
    for (double& x : I) x /= norm;
  }
  return out;
}

namespace {

// Deterministic standard normals: 53-bit uniforms through Box-Muller, one
// draw per call (the second branch is discarded to keep the stream simple).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}
  double next() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) *
           std::cos(2.0 * M_PI * u2);
  }

 private:
  double uniform() { return (rng_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 rng_;
};

}  // namespace

SynthData synth_data(const Mesh& data_mesh, const PhantomSpec& phantom,
                     const std::vector<CurrentPattern>& currents,
                     const NoiseModel& noise) {
  if (noise.level < 0.0)
    throw std::invalid_argument("synth_data: negative noise level");
  SynthData out;
  out.sigma_true = phantom.project(data_mesh);
  const auto system = CemSystem::assemble(data_mesh, out.sigma_true);
  const CemFactor factor(system);
  NormalStream normals(noise.seed);
  for (const auto& I : currents) {
    auto state = factor.solve(system.rhs_from_current(I.values));
    const auto& U = state.voltages.values;
    const double scale = noise.level * vec_max_abs(U);
    std::vector<double> xi(U.size());
    ElectrodeVoltages noisy;
    noisy.values.resize(U.size());
    for (size_t l = 0; l < U.size(); ++l) {
      xi[l] = normals.next();
      noisy.values[l] = U[l] + scale * xi[l];
    }
    // Keep the zero-noise path bit-identical to the clean voltages; the
    // projection would otherwise reshuffle rounding in the last ulp.
    if (noise.level == 0.0)
      noisy.values = U;
    else
      project_sum_zero(noisy.values);
    out.clean.push_back(state.voltages);
    out.noisy.push_back(std::move(noisy));
    out.xi.push_back(std::move(xi));
  }
  return out;
}

namespace {

// Exact integral of |f| for P1 f with nodal values (a, b, c) on a triangle
// of the given area: split along the zero line when signs are mixed.
double tri_abs_integral(double area, double a, double b, double c) {
  const bool has_pos = a > 0.0 || b > 0.0 || c > 0.0;
  const bool has_neg = a < 0.0 || b < 0.0 || c < 0.0;
  const double full = area * (a + b + c) / 3.0;
  if (!has_pos || !has_neg) return std::abs(full);
  // Put the strict-sign minority vertex first.
  double s0 = a, s1 = b, s2 = c;
  const int pos = (a > 0.0) + (b > 0.0) + (c > 0.0);
  const auto minority = [&](double v) { return pos == 1 ? v > 0.0 : v < 0.0; };
  if (minority(s1)) std::swap(s0, s1);
  else if (minority(s2)) std::swap(s0, s2);
  const double t1 = s0 / (s0 - s1);
  const double t2 = s0 / (s0 - s2);
  const double corner = area * t1 * t2 * s0 / 3.0;
  return std::abs(corner) + std::abs(full - corner);
}

}  // namespace

ErrorMetrics error_metrics(const NodalField& sigma, const Mesh& finest,
                           const NodalField& reference) {
  if (reference.size() != static_cast<size_t>(finest.n_vertices()))
    throw std::invalid_argument("error_metrics: reference not on this mesh");
  const NodalField fine = lagrange_interp(sigma, finest);
  ErrorMetrics m;
  double l2_sq = 0.0;
  for (int t = 0; t < finest.n_elements(); ++t) {
    const auto& el = finest.elements[t];
    const double area = finest.element_area(t);
    const double a = fine[el.v[0]] - reference[el.v[0]];
    const double b = fine[el.v[1]] - reference[el.v[1]];
    const double c = fine[el.v[2]] - reference[el.v[2]];
    m.l1 += tri_abs_integral(area, a, b, c);
    l2_sq += area / 6.0 * (a * a + b * b + c * c + a * b + a * c + b * c);
  }
  m.l2 = std::sqrt(l2_sq);
  return m;
}

RunResult run_afem(const RunConfig& config,
                   const std::vector<CurrentPattern>& currents,
                   const std::vector<ElectrodeVoltages>& data) {
  config.validate();
  RunResult res;
  Mesh mesh = config.initial_mesh();
  res.final_mesh = mesh;
  NodalField sigma(mesh.n_vertices(), config.reg.c0);
  try {
    for (int k = 0;; ++k) {
      const auto tic = std::chrono::steady_clock::now();
      auto fit = minimize(mesh, currents, data, std::move(sigma),
                          config.optimizer_options());
      sigma = std::move(fit.sigma);

      // Adjoint states at the recovered conductivity for the estimators.
      const auto system = CemSystem::assemble(mesh, sigma);
      const CemFactor factor(system);
      std::vector<AdjointSolution> adjoints;
      adjoints.reserve(currents.size());
      for (size_t p = 0; p < currents.size(); ++p) {
        std::vector<double> residual = fit.states[p].voltages.values;
        for (size_t l = 0; l < residual.size(); ++l)
          residual[l] -= data[p].values[l];
        adjoints.push_back(factor.solve(system.rhs_from_residual(residual)));
      }
      const auto table = compute_indicators(mesh, sigma, fit.states, adjoints,
                                            config.reg, config.q);
      const auto marks = mark_all(table, config.theta);

      OutputRecord rec;
      rec.iteration = k;
      rec.dof = mesh.n_vertices();
      std::vector<ElectrodeVoltages> computed;
      for (const auto& s : fit.states) computed.push_back(s.voltages);
      rec.misfit = fidelity(computed, data);
      rec.penalty = mm_functional(mesh, sigma, config.reg);
      rec.objective = rec.misfit + 0.5 * config.reg.alpha * rec.penalty;
      rec.eta1_sq = table.total1();
      rec.eta2_sq = table.total2();
      rec.eta3_q = table.total3();
      for (int t : marks.m3)
        rec.max_marked_eta3 = std::max(rec.max_marked_eta3, table.eta3_q[t]);
      res.records.push_back(rec);
      res.sigmas.push_back(sigma);
      res.meshes.push_back(mesh);
      res.descent.push_back(std::move(fit.history));
      res.final_mesh = mesh;
      res.wall_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                        tic)
              .count());

      if (k == config.max_refinements) break;
      Mesh next;
      if (config.mode == RefinementMode::Uniform) {
        next = uniform_refine(mesh);
      } else {
        if (marks.all.empty()) break;  // no signal left
        next = refine(mesh, marks.all);
      }
      sigma = lagrange_interp(sigma, next);
      mesh = std::move(next);
    }
    res.completed = true;
  } catch (const std::exception& e) {
    res.error = e.what();
  }

  if (!res.sigmas.empty()) {
    const NodalField& reference = res.sigmas.back();
    for (size_t k = 0; k < res.records.size(); ++k) {
      const auto m = error_metrics(res.sigmas[k], res.final_mesh, reference);
      res.records[k].l1_error = m.l1;
      res.records[k].l2_error = m.l2;
    }
  }
  return res;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string records_csv(const std::vector<OutputRecord>& records) {
  std::string s =
      "iteration,dof,objective,misfit,penalty,eta1_sq,eta2_sq,eta3_q,"
      "max_marked_eta3,l1_error,l2_error\n";
  for (const auto& r : records) {
    s += std::to_string(r.iteration) + ',' + std::to_string(r.dof) + ',' +
         fmt(r.objective) + ',' + fmt(r.misfit) + ',' + fmt(r.penalty) + ',' +
         fmt(r.eta1_sq) + ',' + fmt(r.eta2_sq) + ',' + fmt(r.eta3_q) + ',' +
         fmt(r.max_marked_eta3) + ',' + fmt(r.l1_error) + ',' +
         fmt(r.l2_error) + '\n';
  }
  return s;
}

std::string timing_csv(const std::vector<double>& wall_seconds) {
  std::string s = "iteration,wall_seconds\n";
  for (size_t k = 0; k < wall_seconds.size(); ++k)
    s += std::to_string(k) + ',' + fmt(wall_seconds[k]) + '\n';
  return s;
}

std::string dump_field_json(const NodalField& field) {
  nlohmann::json j;
  j["values"] = field;
  return j.dump() + "\n";
}

NodalField load_field_json(const std::string& text) {
  return nlohmann::json::parse(text).at("values").get<NodalField>();
}

std::string dump_voltages_json(const std::vector<ElectrodeVoltages>& v) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : v) j.push_back(p.values);
  nlohmann::json root;
  root["voltages"] = j;
  return root.dump() + "\n";
}

std::vector<ElectrodeVoltages> load_voltages_json(const std::string& text) {
  const auto root = nlohmann::json::parse(text);
  std::vector<ElectrodeVoltages> out;
  for (const auto& p : root.at("voltages"))
    out.push_back({p.get<std::vector<double>>()});
  return out;
}

}  // namespace eit
