#ifndef EIT_EXPERIMENTS_HPP
#define EIT_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "eit/mesh.hpp"
#include "eit/objective.hpp"
#include "eit/optimizer.hpp"
#include "eit/types.hpp"

namespace eit {

// Ground-truth conductivity: background plus sharp disks and Gaussian bumps.
struct PhantomSpec {
  struct Circle {
    double cx = 0.0, cy = 0.0, radius = 0.0, amplitude = 0.0;
  };
  struct Bump {
    double cx = 0.0, cy = 0.0, width = 0.0, amplitude = 0.0;
  };
  double background = 1.0;
  std::vector<Circle> circles;
  std::vector<Bump> bumps;

  // Pointwise value; a point exactly on a circle boundary counts as outside.
  double evaluate(double x, double y) const;
  NodalField project(const Mesh& mesh) const;  // nodal evaluation
};

PhantomSpec load_phantom_json(const std::string& text);
std::string dump_phantom_json(const PhantomSpec& phantom);

// Two unit-contrast disks at (0, +-0.5), radius 0.3, on background 1.
PhantomSpec two_disk_phantom();

struct NoiseModel {
  double level = 0.0;  // relative to max |U_l| per pattern
  std::uint64_t seed = 0;
};

enum class RefinementMode { Adaptive, Uniform };

struct RunConfig {
  Rect domain;
  int n0 = 16;                     // initial mesh subdivisions per side
  int electrode_count = 16;
  double electrode_length = 0.25;  // arclength
  double electrode_offset = 0.125; // arclength of the first electrode start
  double contact_impedance = 1.0;
  int pattern_count = 10;

  int max_refinements = 15;  // K
  double theta = 0.7;
  double q = 2.0;
  RegularizationParams reg{1e-2, 2e-2, 1.0, 2.0};
  RefinementMode mode = RefinementMode::Adaptive;

  double forward_tolerance = 1e-10;
  double inner_tolerance = 1e-8;
  int inner_max_iterations = 500;
  int max_outer_iterations = 50;
  double step_tolerance = 1e-4;

  // Uniform refinement loops from the initial mesh for the synthetic-data
  // mesh; keep it at least two loops finer than any reconstruction mesh.
  int data_refinements = 5;
  std::string output_dir;

  ElectrodeLayout layout() const;
  Mesh initial_mesh() const;
  Mesh data_mesh() const;
  GaussNewtonOptions optimizer_options() const;
  void validate() const;  // throws std::invalid_argument
};

RunConfig load_config_json(const std::string& text);
std::string dump_config_json(const RunConfig& config);

// Trigonometric sum-zero patterns of unit Euclidean norm: pattern j (1-based)
// is cos(2 pi j (l-1) / L) for the first ceil(count/2) patterns and
// sin(2 pi (j - ceil(count/2)) (l-1) / L) for the rest.
std::vector<CurrentPattern> generate_currents(int L, int count);

struct SynthData {
  NodalField sigma_true;  // phantom on the data mesh
  std::vector<ElectrodeVoltages> clean;
  std::vector<ElectrodeVoltages> noisy;
  std::vector<std::vector<double>> xi;  // recorded noise draws, per pattern
};

// Forward-solves the phantom on data_mesh (build it finer than any
// reconstruction mesh) and perturbs per pattern by
// level * max_l |U_l| * xi_l, xi standard normal from the seeded generator;
// the noisy voltages are re-projected to zero sum.
SynthData synth_data(const Mesh& data_mesh, const PhantomSpec& phantom,
                     const std::vector<CurrentPattern>& currents,
                     const NoiseModel& noise);

struct OutputRecord {
  int iteration = 0;
  int dof = 0;
  double objective = 0.0;
  double misfit = 0.0;
  double penalty = 0.0;  // F_eps
  double eta1_sq = 0.0;
  double eta2_sq = 0.0;
  double eta3_q = 0.0;
  double max_marked_eta3 = 0.0;  // largest eta3 value among marked elements
  double l1_error = 0.0;         // vs the same run's finest-mesh recovery
  double l2_error = 0.0;
};

struct RunResult {
  std::vector<OutputRecord> records;
  std::vector<double> wall_seconds;           // per iteration, kept out of
                                              // the deterministic records
  std::vector<NodalField> sigmas;             // recovery per iteration
  std::vector<Mesh> meshes;                   // mesh per iteration
  std::vector<std::vector<IterationRecord>> descent;  // optimizer history
  Mesh final_mesh;
  bool completed = false;
  std::string error;  // diagnostic when a loop aborted
};

// Solve -> estimate -> mark -> refine with warm starts; max_refinements
// refinement rounds, one record per mesh (so K = 0 is a single solve).
// Uniform mode refines every element fully each round instead of marking.
// Errors inside a loop stop the run and leave the completed records plus a
// diagnostic in RunResult::error.
RunResult run_afem(const RunConfig& config,
                   const std::vector<CurrentPattern>& currents,
                   const std::vector<ElectrodeVoltages>& data);

struct ErrorMetrics {
  double l1 = 0.0;
  double l2 = 0.0;
};

// Exact L1/L2 norms of the difference after transferring sigma (living on an
// ancestor mesh) to the reference's mesh; the L1 integral splits triangles
// along the zero line of the P1 difference.
ErrorMetrics error_metrics(const NodalField& sigma, const Mesh& finest,
                           const NodalField& reference);

// Deterministic CSV/JSON writers (%.17g, '\n' newlines).
std::string records_csv(const std::vector<OutputRecord>& records);
std::string timing_csv(const std::vector<double>& wall_seconds);
std::string dump_field_json(const NodalField& field);
NodalField load_field_json(const std::string& text);
std::string dump_voltages_json(const std::vector<ElectrodeVoltages>& v);
std::vector<ElectrodeVoltages> load_voltages_json(const std::string& text);

}  // namespace eit

#endif
