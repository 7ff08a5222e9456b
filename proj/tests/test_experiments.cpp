#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "eit/experiments.hpp"
#include "eit/interp.hpp"
#include "eit/mesh.hpp"

using namespace eit;

namespace {

RunConfig tiny_config() {
  RunConfig c;
  c.domain = {-1.0, -1.0, 1.0, 1.0};
  c.electrode_count = 8;
  c.electrode_length = 0.25;
  c.electrode_offset = 0.25;
  c.pattern_count = 4;
  c.n0 = 8;
  c.max_refinements = 2;
  c.data_refinements = 3;
  c.max_outer_iterations = 6;
  c.reg.alpha = 1e-3;
  return c;
}

}  // namespace

TEST_CASE("phantom evaluation") {
  const auto ph = two_disk_phantom();
  CHECK(ph.evaluate(0.0, 0.5) == doctest::Approx(2.0));
  CHECK(ph.evaluate(0.0, -0.5) == doctest::Approx(2.0));
  CHECK(ph.evaluate(0.9, 0.9) == doctest::Approx(1.0));
  // Exactly on the circle counts as outside.
  CHECK(ph.evaluate(0.3, 0.5) == doctest::Approx(1.0));
  CHECK(ph.evaluate(0.29999, 0.5) == doctest::Approx(2.0));

  PhantomSpec bump;
  bump.bumps.push_back({0.0, 0.0, 0.5, 3.0});
  CHECK(bump.evaluate(0.0, 0.0) == doctest::Approx(4.0));
  CHECK(bump.evaluate(10.0, 0.0) == doctest::Approx(1.0).epsilon(1e-9));

  const auto round_trip = load_phantom_json(dump_phantom_json(ph));
  CHECK(round_trip.background == ph.background);
  REQUIRE(round_trip.circles.size() == 2);
  CHECK(round_trip.circles[1].cy == ph.circles[1].cy);
}

TEST_CASE("current patterns") {
  const auto patterns = generate_currents(16, 10);
  REQUIRE(patterns.size() == 10);
  Eigen::MatrixXd M(16, 10);
  for (int j = 0; j < 10; ++j) {
    const auto& I = patterns[j].values;
    REQUIRE(I.size() == 16);
    CHECK(std::abs(vec_sum(I)) < 1e-12);
    CHECK(vec_norm(I) == doctest::Approx(1.0).epsilon(1e-12));
    for (int l = 0; l < 16; ++l) M(l, j) = I[l];
  }
  CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(M).rank() == 10);

  // L = 4, first pattern: cos(pi l / 2) = (1, 0, -1, 0), normalized.
  const auto small = generate_currents(4, 1);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(small[0].values[0] == doctest::Approx(s));
  CHECK(std::abs(small[0].values[1]) < 1e-12);
  CHECK(small[0].values[2] == doctest::Approx(-s));
  CHECK(std::abs(small[0].values[3]) < 1e-12);

  CHECK_THROWS(generate_currents(4, 4));
}

TEST_CASE("synthetic data") {
  const auto config = tiny_config();
  const Mesh data_mesh = config.data_mesh();
  const auto currents = generate_currents(8, 4);
  const auto clean = synth_data(data_mesh, two_disk_phantom(), currents,
                                {0.0, 7});
  for (size_t p = 0; p < currents.size(); ++p) {
    CHECK(clean.clean[p].values == clean.noisy[p].values);
    CHECK(std::abs(vec_sum(clean.clean[p].values)) < 1e-10);
  }
  // sigma_true is the nodal phantom.
  const auto projected = two_disk_phantom().project(data_mesh);
  CHECK(clean.sigma_true == projected);

  const NoiseModel noise{1e-2, 12345};
  const auto a = synth_data(data_mesh, two_disk_phantom(), currents, noise);
  const auto b = synth_data(data_mesh, two_disk_phantom(), currents, noise);
  for (size_t p = 0; p < currents.size(); ++p) {
    CHECK(a.noisy[p].values == b.noisy[p].values);  // bit-identical replay
    CHECK(a.noisy[p].values != a.clean[p].values);
    CHECK(std::abs(vec_sum(a.noisy[p].values)) < 1e-10);
    // Reconstruct the perturbation from the recorded draws.
    const double scale = noise.level * vec_max_abs(a.clean[p].values);
    std::vector<double> replay = a.clean[p].values;
    for (size_t l = 0; l < replay.size(); ++l)
      replay[l] += scale * a.xi[p][l];
    project_sum_zero(replay);
    for (size_t l = 0; l < replay.size(); ++l)
      CHECK(replay[l] == doctest::Approx(a.noisy[p].values[l])
                             .epsilon(1e-12));
  }
  // Different seeds give different draws.
  const auto c =
      synth_data(data_mesh, two_disk_phantom(), currents, {1e-2, 54321});
  CHECK(c.noisy[0].values != a.noisy[0].values);
}

TEST_CASE("error metrics") {
  const auto config = tiny_config();
  const Mesh coarse = config.initial_mesh();
  const Mesh fine = uniform_refine(coarse);
  const NodalField ref(fine.n_vertices(), 1.0);
  const auto zero = error_metrics(NodalField(coarse.n_vertices(), 1.0), fine,
                                  ref);
  CHECK(zero.l1 < 1e-14);
  CHECK(zero.l2 < 1e-14);
  // Constant offset delta on a domain of area 4.
  const auto off = error_metrics(NodalField(coarse.n_vertices(), 1.25), fine,
                                 ref);
  CHECK(off.l1 == doctest::Approx(4.0 * 0.25).epsilon(1e-12));
  CHECK(off.l2 == doctest::Approx(2.0 * 0.25).epsilon(1e-12));
  // Random difference against subdivision quadrature.
  std::mt19937 rng(51);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  NodalField sigma(coarse.n_vertices());
  for (double& x : sigma) x = 1.0 + unif(rng);
  const auto metrics = error_metrics(sigma, fine, ref);
  const auto moved = lagrange_interp(sigma, fine);
  double l1 = 0.0, l2 = 0.0;
  const int n = 80;
  for (int t = 0; t < fine.n_elements(); ++t) {
    const auto& e = fine.elements[t].v;
    const double area = fine.element_area(t);
    double a1 = 0.0, a2 = 0.0;
    int cnt = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; i + j < n; ++j) {
        const double l0 = (i + 1.0 / 3.0) / n, l1q = (j + 1.0 / 3.0) / n;
        const double d = l0 * (moved[e[0]] - ref[e[0]]) +
                         l1q * (moved[e[1]] - ref[e[1]]) +
                         (1.0 - l0 - l1q) * (moved[e[2]] - ref[e[2]]);
        a1 += std::abs(d);
        a2 += d * d;
        ++cnt;
      }
    l1 += a1 / cnt * area;
    l2 += a2 / cnt * area;
  }
  CHECK(metrics.l1 == doctest::Approx(l1).epsilon(2e-3));
  CHECK(metrics.l2 == doctest::Approx(std::sqrt(l2)).epsilon(2e-3));
}

TEST_CASE("serialization round trips") {
  NodalField f{1.0, -0.25, 3.5e-7, 2.0 / 3.0};
  CHECK(load_field_json(dump_field_json(f)) == f);
  std::vector<ElectrodeVoltages> v(2);
  v[0].values = {0.5, -0.5};
  v[1].values = {1.0 / 3.0, -1.0 / 3.0};
  const auto w = load_voltages_json(dump_voltages_json(v));
  REQUIRE(w.size() == 2);
  CHECK(w[0].values == v[0].values);
  CHECK(w[1].values == v[1].values);

  auto config = tiny_config();
  config.output_dir = "out";
  const auto back = load_config_json(dump_config_json(config));
  CHECK(back.n0 == config.n0);
  CHECK(back.electrode_count == config.electrode_count);
  CHECK(back.reg.alpha == config.reg.alpha);
  CHECK(back.mode == config.mode);
  CHECK(back.output_dir == config.output_dir);
  config.mode = RefinementMode::Uniform;
  CHECK(load_config_json(dump_config_json(config)).mode ==
        RefinementMode::Uniform);
}

TEST_CASE("adaptive loop plumbing") {
  auto config = tiny_config();
  const auto currents =
      generate_currents(config.electrode_count, config.pattern_count);
  const auto data = synth_data(config.data_mesh(), two_disk_phantom(),
                               currents, {1e-3, 3});

  SUBCASE("no refinement rounds -> single record") {
    auto c = config;
    c.max_refinements = 0;
    const auto result = run_afem(c, currents, data.noisy);
    CHECK(result.completed);
    CHECK(result.error.empty());
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].dof == c.initial_mesh().n_vertices());
    CHECK(result.records[0].l1_error == 0.0);  // reference is itself
  }

  SUBCASE("adaptive run grows the mesh and the records are replayable") {
    const auto result = run_afem(config, currents, data.noisy);
    CHECK(result.completed);
    REQUIRE(result.records.size() ==
            static_cast<size_t>(config.max_refinements) + 1);
    for (size_t k = 1; k < result.records.size(); ++k)
      CHECK(result.records[k].dof > result.records[k - 1].dof);
    for (const auto& r : result.records) {
      CHECK(r.objective >= 0.0);
      CHECK(r.eta1_sq >= 0.0);
      CHECK(r.eta3_q >= 0.0);
    }
    CHECK(result.wall_seconds.size() == result.records.size());
    // Errors are measured against the final recovery, so the last is zero.
    CHECK(result.records.back().l1_error == 0.0);
    CHECK(result.records.front().l1_error > 0.0);

    const auto again = run_afem(config, currents, data.noisy);
    CHECK(records_csv(again.records) == records_csv(result.records));
  }

  SUBCASE("uniform mode quadruples elements") {
    auto c = config;
    c.mode = RefinementMode::Uniform;
    c.max_refinements = 2;
    const auto result = run_afem(c, currents, data.noisy);
    CHECK(result.completed);
    REQUIRE(result.meshes.size() == 3);
    for (size_t k = 1; k < result.meshes.size(); ++k)
      CHECK(result.meshes[k].n_elements() ==
            4 * result.meshes[k - 1].n_elements());
  }
}

TEST_CASE("csv formats") {
  OutputRecord r;
  r.iteration = 1;
  r.dof = 81;
  r.objective = 1.0 / 3.0;
  const auto csv = records_csv({r});
  CHECK(csv.find("iteration,dof,objective") == 0);
  CHECK(csv.find("0.33333333333333331") != std::string::npos);
  CHECK(csv.back() == '\n');
  const auto t = timing_csv({0.5, 1.25});
  CHECK(t.find("1.25") != std::string::npos);
}
