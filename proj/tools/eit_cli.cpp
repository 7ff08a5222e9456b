#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eit/cem.hpp"
#include "eit/experiments.hpp"
#include "eit/mesh.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

eit::RunConfig config_from(const std::string& path) {
  if (path.empty()) return {};
  return eit::load_config_json(read_file(path));
}

eit::PhantomSpec phantom_from(const std::string& path) {
  if (path.empty()) return eit::two_disk_phantom();
  return eit::load_phantom_json(read_file(path));
}

struct CsvRow {
  int dof = 0;
  double l1 = 0.0, l2 = 0.0;
};

std::vector<CsvRow> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<CsvRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 11) continue;
    rows.push_back({std::stoi(cells[1]), std::stod(cells[9]),
                    std::stod(cells[10])});
  }
  return rows;
}

// Log-log interpolation of an error curve at the given dof.
double interp_error(const std::vector<CsvRow>& rows, int dof,
                    double CsvRow::* field) {
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i].dof <= dof && dof <= rows[i + 1].dof) {
      const double t = (std::log(static_cast<double>(dof)) -
                        std::log(static_cast<double>(rows[i].dof))) /
                       (std::log(static_cast<double>(rows[i + 1].dof)) -
                        std::log(static_cast<double>(rows[i].dof)));
      return std::exp((1.0 - t) * std::log(rows[i].*field) +
                      t * std::log(rows[i + 1].*field));
    }
  }
  throw std::runtime_error("dof outside the comparison range");
}

int run_forward(const std::string& config_path, const std::string& phantom_path,
                const std::string& out, const std::string& sigma_out,
                const std::string& mesh_out) {
  const auto config = config_from(config_path);
  const auto phantom = phantom_from(phantom_path);
  const eit::Mesh mesh = config.data_mesh();
  const auto sigma = phantom.project(mesh);
  const auto system = eit::CemSystem::assemble(mesh, sigma);
  const eit::CemFactor factor(system);
  const auto currents =
      eit::generate_currents(config.electrode_count, config.pattern_count);
  std::vector<eit::ElectrodeVoltages> voltages;
  for (const auto& I : currents)
    voltages.push_back(factor.solve(system.rhs_from_current(I.values)).voltages);
  write_file(out, eit::dump_voltages_json(voltages));
  if (!sigma_out.empty()) write_file(sigma_out, eit::dump_field_json(sigma));
  if (!mesh_out.empty()) write_file(mesh_out, eit::dump_mesh_json(mesh));
  return 0;
}

int run_synth(const std::string& config_path, const std::string& phantom_path,
              std::uint64_t seed, double noise, const std::string& out,
              const std::string& clean_out, const std::string& xi_out) {
  const auto config = config_from(config_path);
  const auto phantom = phantom_from(phantom_path);
  const eit::Mesh mesh = config.data_mesh();
  const auto currents =
      eit::generate_currents(config.electrode_count, config.pattern_count);
  const auto data = eit::synth_data(mesh, phantom, currents, {noise, seed});
  write_file(out, eit::dump_voltages_json(data.noisy));
  if (!clean_out.empty())
    write_file(clean_out, eit::dump_voltages_json(data.clean));
  if (!xi_out.empty()) {
    std::vector<eit::ElectrodeVoltages> xi;
    for (const auto& row : data.xi) xi.push_back({row});
    write_file(xi_out, eit::dump_voltages_json(xi));
  }
  return 0;
}

int run_reconstruct(const std::string& config_path,
                    const std::string& data_path, std::string out_dir,
                    bool dump_fields) {
  auto config = config_from(config_path);
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (config.output_dir.empty())
    throw std::runtime_error("reconstruct needs --out-dir or output_dir");
  const auto data = eit::load_voltages_json(read_file(data_path));
  const auto currents =
      eit::generate_currents(config.electrode_count, config.pattern_count);
  const auto result = eit::run_afem(config, currents, data);

  std::filesystem::create_directories(config.output_dir);
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(config.output_dir) / name).string();
  };
  write_file(path("records.csv"), eit::records_csv(result.records));
  write_file(path("timing.csv"), eit::timing_csv(result.wall_seconds));
  write_file(path("config.json"), eit::dump_config_json(config));
  if (dump_fields) {
    char name[32];
    for (size_t k = 0; k < result.sigmas.size(); ++k) {
      std::snprintf(name, sizeof name, "sigma_%03zu.json", k);
      write_file(path(name), eit::dump_field_json(result.sigmas[k]));
      std::snprintf(name, sizeof name, "mesh_%03zu.json", k);
      write_file(path(name), eit::dump_mesh_json(result.meshes[k]));
    }
  }
  if (!result.error.empty()) {
    std::cerr << "aborted after " << result.records.size()
              << " iteration(s): " << result.error << "\n";
    return 1;
  }
  std::cout << "wrote " << result.records.size() << " records to "
            << config.output_dir << "\n";
  return 0;
}

int run_compare(const std::string& a_path, const std::string& b_path) {
  const auto a = read_records(a_path);
  const auto b = read_records(b_path);
  if (a.size() < 2 || b.size() < 2)
    throw std::runtime_error("compare needs at least two records per run");
  // The last record of each run is its own reference (zero error); compare
  // at the largest earlier dof of run A that lies inside run B's curve.
  int dof = -1;
  for (size_t i = 0; i + 1 < a.size(); ++i)
    if (a[i].dof >= b.front().dof && a[i].dof <= b[b.size() - 2].dof)
      dof = std::max(dof, a[i].dof);
  if (dof < 0) throw std::runtime_error("no comparable dof between the runs");
  const CsvRow* row = nullptr;
  for (const auto& r : a)
    if (r.dof == dof) row = &r;
  const double bl1 = interp_error({b.begin(), b.end() - 1}, dof, &CsvRow::l1);
  const double bl2 = interp_error({b.begin(), b.end() - 1}, dof, &CsvRow::l2);
  std::cout << "dof " << dof << "\n"
            << "l1  a=" << row->l1 << " b=" << bl1
            << " ratio=" << row->l1 / bl1 << "\n"
            << "l2  a=" << row->l2 << " b=" << bl2
            << " ratio=" << row->l2 / bl2 << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"piecewise-constant conductivity reconstruction from "
               "electrode voltages"};
  app.require_subcommand(1);

  std::string config_path, phantom_path, data_path, out, out_dir;
  std::string sigma_out, mesh_out, clean_out, xi_out, a_path, b_path;
  std::uint64_t seed = 0;
  double noise = 1e-3;
  bool dump_fields = false;

  auto* fwd = app.add_subcommand("forward",
                                 "solve a phantom and dump exact voltages");
  fwd->add_option("--config", config_path, "config JSON");
  fwd->add_option("--phantom", phantom_path,
                  "phantom JSON (default: two disks)");
  fwd->add_option("--out", out, "output voltages JSON")->required();
  fwd->add_option("--sigma-out", sigma_out, "dump the nodal conductivity");
  fwd->add_option("--mesh-out", mesh_out, "dump the data mesh");

  auto* synth = app.add_subcommand("synth", "generate noisy synthetic data");
  synth->add_option("--config", config_path, "config JSON");
  synth->add_option("--phantom", phantom_path,
                    "phantom JSON (default: two disks)");
  synth->add_option("--seed", seed, "RNG seed")->required();
  synth->add_option("--noise", noise, "relative noise level");
  synth->add_option("--out", out, "output noisy voltages JSON")->required();
  synth->add_option("--clean-out", clean_out, "also dump exact voltages");
  synth->add_option("--xi-out", xi_out, "also dump the noise draws");

  auto* rec = app.add_subcommand("reconstruct",
                                 "adaptive (or uniform) reconstruction run");
  rec->add_option("--config", config_path, "config JSON");
  rec->add_option("--data", data_path, "measured voltages JSON")->required();
  rec->add_option("--out-dir", out_dir, "output directory");
  rec->add_flag("--dump-fields", dump_fields,
                "write per-iteration mesh and field dumps");

  auto* cmp = app.add_subcommand("compare",
                                 "compare error curves of two runs");
  cmp->add_option("--a", a_path, "records.csv of run A")->required();
  cmp->add_option("--b", b_path, "records.csv of run B")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (fwd->parsed())
      return run_forward(config_path, phantom_path, out, sigma_out, mesh_out);
    if (synth->parsed())
      return run_synth(config_path, phantom_path, seed, noise, out, clean_out,
                       xi_out);
    if (rec->parsed())
      return run_reconstruct(config_path, data_path, out_dir, dump_fields);
    if (cmp->parsed()) return run_compare(a_path, b_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
