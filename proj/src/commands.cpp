#include "scos/commands.hpp"

#include "scos/eval.hpp"
#include "scos/hsi.hpp"
#include "scos/ident.hpp"
#include "scos/io.hpp"
#include "scos/select.hpp"
#include "scos/solver.hpp"
#include "scos/synth.hpp"
#include "scos/types.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace scos::commands {
namespace {

namespace fs = std::filesystem;

long long parse_integer(const std::string& key, const std::string& text) {
  long long value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  require(ec == std::errc() && ptr == last, ErrorCode::InvalidArgument,
          "config key " + key + " expects an integer, got \"" + text + "\"");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  raise(ErrorCode::InvalidArgument,
        "config key " + key + " expects a boolean, got \"" + text + "\"");
}

solver::Formulation parse_formulation(const std::string& text) {
  if (text == "penalty") return solver::Formulation::Penalty;
  if (text == "auglag") return solver::Formulation::AugLag;
  if (text == "auglag-psi") return solver::Formulation::AugLagPsi;
  raise(ErrorCode::InvalidArgument,
        "formulation must be penalty, auglag, or auglag-psi, got \"" + text +
            "\"");
}

const char* formulation_name(solver::Formulation f) {
  switch (f) {
    case solver::Formulation::Penalty: return "penalty";
    case solver::Formulation::AugLag: return "auglag";
    case solver::Formulation::AugLagPsi: return "auglag-psi";
  }
  return "auglag";
}

solver::GUpdate parse_g_update(const std::string& text) {
  if (text == "auto") return solver::GUpdate::Auto;
  if (text == "eig") return solver::GUpdate::Eig;
  if (text == "orthiter") return solver::GUpdate::OrthIter;
  raise(ErrorCode::InvalidArgument,
        "g-update must be auto, eig, or orthiter, got \"" + text + "\"");
}

const char* g_update_name(solver::GUpdate g) {
  switch (g) {
    case solver::GUpdate::Auto: return "auto";
    case solver::GUpdate::Eig: return "eig";
    case solver::GUpdate::OrthIter: return "orthiter";
  }
  return "auto";
}

const char* source_name(KeySource source) {
  switch (source) {
    case KeySource::Default: return "default";
    case KeySource::File: return "file";
    case KeySource::Flag: return "flag";
  }
  return "default";
}

// Flag values are collected as (key, text) pairs during CLI parsing and
// applied after the config file, so flags always win regardless of their
// position on the command line.
using PendingFlags = std::vector<std::pair<std::string, std::string>>;

void kv_flag(CLI::App& app, const std::string& flag, const std::string& key,
             PendingFlags& pending, const std::string& help) {
  app.add_option_function<std::string>(
      flag,
      [key, &pending](const std::string& value) {
        pending.emplace_back(key, value);
      },
      help);
}

void apply_scale(RunConfig& config, const std::string& scale) {
  if (scale == "desk") {
    config.scenario.n_ambient = 200;
    config.scenario.n_views = 40;
    config.scenario.n_clusters = 3;
    config.scenario.subspace_dim = 4;
    config.scenario.view_cols = 10;
  } else {  // "paper", vetted by the flag's IsMember check
    config.scenario.n_ambient = 1000;
    config.scenario.n_views = 100;
    config.scenario.n_clusters = 5;
    config.scenario.subspace_dim = 20;
    config.scenario.view_cols = 50;
  }
}

// defaults -> config file -> scale preset -> remaining flags.
void assemble(ConfigSchema& schema, RunConfig& config,
              const std::string& config_path, const std::string& scale,
              const PendingFlags& pending) {
  if (!config_path.empty()) schema.apply_file(config_path);
  if (!scale.empty()) apply_scale(config, scale);
  for (const auto& [key, value] : pending)
    schema.set(key, value, KeySource::Flag);
}

fs::path ensure_dir(const std::string& dir) {
  fs::path path(dir);
  std::error_code ec;
  fs::create_directories(path, ec);
  require(!ec, ErrorCode::IoError,
          "cannot create output directory " + path.string());
  return path;
}

void write_trace_csv(const fs::path& path, const solver::FitTrace& trace,
                     bool mask_walltime) {
  std::ofstream file(path);
  require(file.good(), ErrorCode::IoError, "cannot write " + path.string());
  file << "outer_iter,rho,objective,constraint_violation,wall_ms\n";
  for (const auto& row : trace.rows) {
    file << row.outer_iter << ',' << io::format_double(row.rho) << ','
         << io::format_double(row.objective) << ','
         << io::format_double(row.constraint_violation) << ','
         << io::format_double(mask_walltime ? 0.0 : row.wall_ms) << '\n';
  }
  require(file.good(), ErrorCode::IoError, "failed writing " + path.string());
}

void write_assignments_csv(const fs::path& path, const std::vector<int>& labels,
                           const Vector& phi) {
  std::ofstream file(path);
  require(file.good(), ErrorCode::IoError, "cannot write " + path.string());
  file << "view_index,cluster,phi_k\n";
  for (std::size_t k = 0; k < labels.size(); ++k) {
    file << k << ',' << labels[k] << ','
         << io::format_double(phi(static_cast<Index>(k))) << '\n';
  }
  require(file.good(), ErrorCode::IoError, "failed writing " + path.string());
}

void write_dims_csv(const fs::path& path, const std::vector<Index>& dims) {
  std::ofstream file(path);
  require(file.good(), ErrorCode::IoError, "cannot write " + path.string());
  file << "cluster,dim\n";
  for (std::size_t r = 0; r < dims.size(); ++r)
    file << r + 1 << ',' << dims[r] << '\n';
  require(file.good(), ErrorCode::IoError, "failed writing " + path.string());
}

int usage_error(CLI::App& app, const CLI::ParseError& e, std::ostream& err) {
  err << e.what() << '\n' << app.help();
  return 2;
}

// ---------------------------------------------------------------------------
// synth-bench: Monte Carlo sweep over an (INR, SINR) grid.

int cmd_synth_bench(const std::vector<std::string>& args, std::ostream& out,
                    std::ostream& err) {
  CLI::App app{"Monte Carlo benchmark over an (INR, SINR dB) grid",
               "scos synth-bench"};
  std::vector<double> inr_list{0.5};
  std::vector<double> sinr_list{0.0};
  int runs = 100;
  std::string out_dir, scale, config_path;
  std::uint64_t master_seed = 1;
  bool keep_walltime = false;
  PendingFlags pending;

  app.add_option("--inr-list", inr_list, "comma-separated INR values")
      ->delimiter(',');
  app.add_option("--sinr-db-range", sinr_list,
                 "comma-separated SINR values in dB")
      ->delimiter(',');
  app.add_option("--runs", runs, "Monte Carlo repetitions per grid point")
      ->check(CLI::Range(1, std::numeric_limits<int>::max()));
  app.add_option("--out-dir", out_dir, "output directory")->required();
  app.add_option("--scale", scale, "size preset")
      ->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--seed", master_seed, "master seed for the run grid");
  app.add_option("--config", config_path, "key=value config file");
  app.add_flag("--keep-walltime", keep_walltime,
               "emit measured wall times instead of zeros");
  kv_flag(app, "--threads", "run.threads", pending, "worker pool cap");
  kv_flag(app, "--rho0", "solver.rho0", pending, "initial penalty weight");
  kv_flag(app, "--alpha", "solver.alpha", pending, "penalty growth factor");
  kv_flag(app, "--max-outer", "solver.max_outer", pending,
          "outer iteration cap");
  kv_flag(app, "--formulation", "solver.formulation", pending,
          "penalty | auglag | auglag-psi");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(app, e, err);
  }

  RunConfig config;
  ConfigSchema schema(config);
  try {
    assemble(schema, config, config_path, scale, pending);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    fs::path dir = ensure_dir(out_dir);
    eval::MonteCarloConfig mc;
    mc.base = config.scenario;
    mc.inr_grid = inr_list;
    mc.sinr_db_grid = sinr_list;
    mc.runs = runs;
    mc.master_seed = master_seed;
    mc.threads = config.threads;
    mc.solver = config.solver;
    eval::MonteCarloTable table = eval::monte_carlo(mc);
    eval::write_runs_csv(dir / "runs.csv", table, !keep_walltime);
    eval::write_aggregate_csv(dir / "aggregate.csv", table, !keep_walltime);
    schema.write_resolved(dir);
    out << "grid_points=" << table.aggregates.size()
        << " rows=" << table.rows.size() << " out=" << dir.string() << '\n';
    return 0;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// fit: cluster a serialized scenario directory.

select::DimCriterion parse_criterion(const std::string& text) {
  if (text == "aic") return select::DimCriterion::AIC;
  if (text == "mdl") return select::DimCriterion::MDL;
  if (text == "eigengap") return select::DimCriterion::EigenGap;
  raise(ErrorCode::InvalidArgument,
        "criterion must be aic, mdl, or eigengap, got \"" + text + "\"");
}

int cmd_fit(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Fit the clustering model to a serialized scenario directory",
               "scos fit"};
  std::string views_dir, out_dir, config_path, criterion_text = "aic";
  Index n_clusters = 0;
  Index uniform_dim = 0;
  bool dims_auto = false;
  bool keep_walltime = false;
  PendingFlags pending;

  app.add_option("--views", views_dir, "scenario directory")->required();
  app.add_option("--clusters", n_clusters, "number of clusters R")
      ->required()
      ->check(CLI::Range(Index{1}, std::numeric_limits<Index>::max()));
  app.add_option("--dims", uniform_dim, "uniform subspace dimension L")
      ->check(CLI::Range(Index{1}, std::numeric_limits<Index>::max()));
  app.add_flag("--dims-auto", dims_auto,
               "estimate per-cluster dimensions after an initial fit, then "
               "refit");
  app.add_option("--criterion", criterion_text,
                 "dimension criterion for --dims-auto")
      ->check(CLI::IsMember({"aic", "mdl", "eigengap"}));
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--config", config_path, "key=value config file");
  app.add_flag("--keep-walltime", keep_walltime,
               "emit measured wall times instead of zeros");
  kv_flag(app, "--formulation", "solver.formulation", pending,
          "penalty | auglag | auglag-psi");
  kv_flag(app, "--rho0", "solver.rho0", pending, "initial penalty weight");
  kv_flag(app, "--alpha", "solver.alpha", pending, "penalty growth factor");
  kv_flag(app, "--epsilon-psi", "solver.epsilon_psi", pending,
          "smoothing constant of the square-root coupling");
  kv_flag(app, "--max-outer", "solver.max_outer", pending,
          "outer iteration cap");
  kv_flag(app, "--max-inner", "solver.max_inner", pending,
          "inner iteration cap");
  kv_flag(app, "--tol-rel", "solver.tol_rel", pending, "relative stop");
  kv_flag(app, "--orthiter-steps", "solver.orthiter_steps", pending,
          "orthogonal-iteration steps per basis round");
  kv_flag(app, "--g-update", "solver.g_update", pending,
          "auto | eig | orthiter");
  kv_flag(app, "--seed", "solver.seed", pending, "solver seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(app, e, err);
  }
  if (uniform_dim == 0 && !dims_auto) {
    err << "one of --dims or --dims-auto is required\n" << app.help();
    return 2;
  }

  RunConfig config;
  ConfigSchema schema(config);
  select::DimCriterion criterion;
  try {
    assemble(schema, config, config_path, "", pending);
    criterion = parse_criterion(criterion_text);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    synth::Scenario scenario = synth::load_scenario(views_dir);
    ViewList bases = synth::view_bases(scenario);
    Index min_cols = std::numeric_limits<Index>::max();
    for (const Matrix& u : bases) min_cols = std::min(min_cols, u.cols());

    std::vector<Index> dims(static_cast<std::size_t>(n_clusters),
                            uniform_dim > 0 ? uniform_dim : min_cols);
    solver::FitResult result = solver::fit(bases, n_clusters, dims,
                                           config.solver);
    if (dims_auto) {
      std::vector<int> labels = solver::assign_labels(result.model.c);
      select::DimensionEstimate estimate =
          select::estimate_dims(bases, labels, criterion);
      dims = estimate.per_cluster_dim;
      result = solver::fit(bases, n_clusters, dims, config.solver);
    }

    fs::path dir = ensure_dir(out_dir);
    std::vector<int> labels = solver::assign_labels(result.model.c);
    Vector phi = solver::view_fit_phi(bases, result.model);
    write_assignments_csv(dir / "assignments.csv", labels, phi);
    write_trace_csv(dir / "trace.csv", result.trace, !keep_walltime);
    write_dims_csv(dir / "dims.csv", dims);
    solver::Model extracted = solver::extract_orthonormal(result.model);
    for (std::size_t r = 0; r < extracted.bases.size(); ++r) {
      char name[16];
      std::snprintf(name, sizeof name, "g_%03zu.mat", r);
      io::write_matrix(dir / name, extracted.bases[r]);
    }
    schema.write_resolved(dir);
    out << "views=" << bases.size() << " clusters=" << n_clusters
        << " phi_bar=" << io::format_double(phi.mean())
        << " outers=" << result.trace.rows.size()
        << " restarts=" << result.trace.restarts.size() << '\n';
    return 0;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// select-order: phi-bar sweep over R = 1..r_max.

int cmd_select_order(const std::vector<std::string>& args, std::ostream& out,
                     std::ostream& err) {
  CLI::App app{"Select the number of clusters by the phi-bar sweep",
               "scos select-order"};
  std::string views_dir, out_dir, config_path;
  Index r_max = 0;
  Index uniform_dim = 0;
  double tau = 0.1;
  PendingFlags pending;

  app.add_option("--views", views_dir, "scenario directory")->required();
  app.add_option("--r-max", r_max, "largest cluster count to try")
      ->required()
      ->check(CLI::Range(Index{1}, std::numeric_limits<Index>::max()));
  app.add_option("--dims", uniform_dim, "uniform subspace dimension L")
      ->required()
      ->check(CLI::Range(Index{1}, std::numeric_limits<Index>::max()));
  app.add_option("--tau", tau, "relative phi-bar improvement threshold");
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--config", config_path, "key=value config file");
  kv_flag(app, "--rho0", "solver.rho0", pending, "initial penalty weight");
  kv_flag(app, "--alpha", "solver.alpha", pending, "penalty growth factor");
  kv_flag(app, "--max-outer", "solver.max_outer", pending,
          "outer iteration cap");
  kv_flag(app, "--formulation", "solver.formulation", pending,
          "penalty | auglag | auglag-psi");
  kv_flag(app, "--seed", "solver.seed", pending, "solver seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(app, e, err);
  }

  RunConfig config;
  ConfigSchema schema(config);
  try {
    assemble(schema, config, config_path, "", pending);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    synth::Scenario scenario = synth::load_scenario(views_dir);
    ViewList bases = synth::view_bases(scenario);
    select::SelectConfig sc;
    sc.tau = tau;
    sc.solver = config.solver;
    select::OrderSelection selection =
        select::select_num_clusters(bases, r_max, uniform_dim, sc);

    fs::path dir = ensure_dir(out_dir);
    std::ofstream file(dir / "order.csv");
    require(file.good(), ErrorCode::IoError, "cannot write order.csv");
    file << "r,phi_bar\n";
    for (std::size_t i = 0; i < selection.curve.size(); ++i)
      file << i + 1 << ',' << io::format_double(selection.curve[i]) << '\n';
    require(file.good(), ErrorCode::IoError, "failed writing order.csv");
    schema.write_resolved(dir);
    out << "R*=" << selection.r_star << '\n';
    return 0;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// ident-check: Theorem-style recovery conditions on a known scenario.

int cmd_ident_check(const std::vector<std::string>& args, std::ostream& out,
                    std::ostream& err) {
  CLI::App app{"Evaluate the identifiability conditions of a scenario",
               "scos ident-check"};
  std::string views_dir, out_dir, scale, config_path;
  PendingFlags pending;

  app.add_option("--views", views_dir,
                 "scenario directory; its recorded config is regenerated "
                 "in memory to recover the ground-truth blocks");
  app.add_option("--scale", scale, "size preset")
      ->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--out", out_dir, "optional output directory");
  app.add_option("--config", config_path, "key=value config file");
  kv_flag(app, "--seed", "scenario.seed", pending, "scenario seed");
  kv_flag(app, "--sinr-db", "scenario.sinr_db", pending, "target SINR in dB");
  kv_flag(app, "--inr", "scenario.inr", pending, "interference-to-noise ratio");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(app, e, err);
  }

  RunConfig config;
  ConfigSchema schema(config);
  try {
    assemble(schema, config, config_path, scale, pending);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    synth::ScenarioConfig scenario_config = config.scenario;
    if (!views_dir.empty())
      scenario_config = synth::load_scenario(views_dir).config;
    synth::Scenario scenario = synth::generate(scenario_config);
    ident::IdentReport report = ident::check_identifiability(scenario);
    out << ident::format_report(report);
    if (!out_dir.empty()) {
      fs::path dir = ensure_dir(out_dir);
      std::ofstream file(dir / "ident.csv");
      require(file.good(), ErrorCode::IoError, "cannot write ident.csv");
      file << "key,value\n";
      for (const auto& [key, value] : ident::report_kv(report))
        file << key << ',' << value << '\n';
      require(file.good(), ErrorCode::IoError, "failed writing ident.csv");
      schema.write_resolved(dir);
    }
    return 0;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// hsi: hypercube clustering pipeline.

int cmd_hsi(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Cluster a hyperspectral cube and render the label map",
               "scos hsi"};
  std::string cube_path, out_dir, config_path;
  Index n_clusters = 0;
  Index uniform_dim = 2;
  bool keep_walltime = false;
  PendingFlags pending;

  app.add_option("--cube", cube_path, "cube header file")->required();
  app.add_option("--clusters", n_clusters, "number of clusters R")
      ->required()
      ->check(CLI::Range(Index{1}, std::numeric_limits<Index>::max()));
  app.add_option("--dims", uniform_dim, "uniform subspace dimension L")
      ->check(CLI::Range(Index{1}, std::numeric_limits<Index>::max()));
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--config", config_path, "key=value config file");
  app.add_flag("--keep-walltime", keep_walltime,
               "emit measured wall times instead of zeros");
  kv_flag(app, "--s-r", "hsi.s_r", pending, "neighborhood window side");
  kv_flag(app, "--s-a", "hsi.s_a", pending, "adjacency window side");
  kv_flag(app, "--rho0", "solver.rho0", pending, "initial penalty weight");
  kv_flag(app, "--alpha", "solver.alpha", pending, "penalty growth factor");
  kv_flag(app, "--epsilon-psi", "hsi.epsilon_psi", pending,
          "smoothing constant of the spatial coupling");
  kv_flag(app, "--max-outer", "solver.max_outer", pending,
          "outer iteration cap");
  kv_flag(app, "--max-inner", "solver.max_inner", pending,
          "inner iteration cap");
  kv_flag(app, "--tol-rel", "solver.tol_rel", pending, "relative stop");
  kv_flag(app, "--seed", "solver.seed", pending, "solver seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(app, e, err);
  }

  RunConfig config;
  ConfigSchema schema(config);
  try {
    assemble(schema, config, config_path, "", pending);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    hsi::HyperCube cube = hsi::load_cube(cube_path);
    hsi::HsiFitConfig fit_config;
    fit_config.solver = config.solver;
    fit_config.reg = config.reg;
    std::vector<Index> dims(static_cast<std::size_t>(n_clusters), uniform_dim);
    hsi::HsiFitResult result =
        hsi::fit_hsi(cube, n_clusters, dims, config.s_r, config.s_a,
                     fit_config);

    fs::path dir = ensure_dir(out_dir);
    io::write_int_grid_csv(dir / "label_map.csv", result.label_grid,
                           cube.height, cube.width);
    hsi::render_map(dir / "map.ppm", result.label_grid, cube.height,
                    cube.width);
    write_trace_csv(dir / "trace.csv", result.fit.trace, !keep_walltime);
    schema.write_resolved(dir);
    out << "pixels=" << cube.n_pixels()
        << " truncated_views=" << result.truncated_views
        << " outers=" << result.fit.trace.rows.size() << '\n';
    if (!cube.labels.empty()) {
      eval::MetricsReport metrics =
          hsi::masked_metrics(result.label_grid, cube.labels);
      out << "OA=" << io::format_double(metrics.acc) << '\n'
          << "ARI=" << io::format_double(metrics.ari) << '\n'
          << "NMI=" << io::format_double(metrics.nmi) << '\n'
          << "APR=" << io::format_double(metrics.apr) << '\n';
    }
    return 0;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  }
}

// ---------------------------------------------------------------------------
// synth-gen / cube-gen: serialize test inputs for the other commands.

int cmd_synth_gen(const std::vector<std::string>& args, std::ostream& out,
                  std::ostream& err) {
  CLI::App app{"Generate and serialize a synthetic scenario directory",
               "scos synth-gen"};
  std::string out_dir, scale, config_path;
  PendingFlags pending;

  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--scale", scale, "size preset")
      ->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--config", config_path, "key=value config file");
  kv_flag(app, "--seed", "scenario.seed", pending, "scenario seed");
  kv_flag(app, "--sinr-db", "scenario.sinr_db", pending, "target SINR in dB");
  kv_flag(app, "--inr", "scenario.inr", pending, "interference-to-noise ratio");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(app, e, err);
  }

  RunConfig config;
  ConfigSchema schema(config);
  try {
    assemble(schema, config, config_path, scale, pending);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    synth::Scenario scenario = synth::generate(config.scenario);
    fs::path dir = ensure_dir(out_dir);
    synth::save_scenario(scenario, dir);
    schema.write_resolved(dir);
    out << "views=" << scenario.views.size() << " out=" << dir.string()
        << '\n';
    return 0;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  }
}

int cmd_cube_gen(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  CLI::App app{"Generate a synthetic labeled hypercube (vertical class bands)",
               "scos cube-gen"};
  std::string out_header, noise_db_text = "inf";
  Index height = 0, width = 0, bands = 0, n_classes = 0, endmembers = 2;
  std::uint64_t seed = 1;

  app.add_option("--out", out_header, "cube header path (.hdr)")->required();
  app.add_option("--height", height, "rows")->required();
  app.add_option("--width", width, "columns")->required();
  app.add_option("--bands", bands, "spectral bands")->required();
  app.add_option("--classes", n_classes, "number of vertical class bands")
      ->required()
      ->check(CLI::Range(Index{1}, std::numeric_limits<Index>::max()));
  app.add_option("--endmembers", endmembers, "endmembers per class");
  app.add_option("--noise-db", noise_db_text, "SNR in dB; inf for noiseless");
  app.add_option("--seed", seed, "generator seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(app, e, err);
  }

  double noise_db = 0.0;
  try {
    noise_db = io::parse_double(noise_db_text);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 2;
  }

  try {
    require(height >= 1 && width >= n_classes, ErrorCode::InvalidArgument,
            "cube must be at least 1 x n_classes");
    std::vector<int> class_map(static_cast<std::size_t>(height * width));
    for (Index r = 0; r < height; ++r)
      for (Index c = 0; c < width; ++c)
        class_map[static_cast<std::size_t>(r * width + c)] = static_cast<int>(
            1 + std::min(n_classes - 1, c * n_classes / width));
    hsi::HyperCube cube = hsi::synth_cube(height, width, class_map,
                                          endmembers, bands, noise_db, seed);
    hsi::save_cube(cube, out_header);
    out << "cube=" << out_header << " pixels=" << cube.n_pixels()
        << " bands=" << cube.bands << '\n';
    return 0;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  }
}

using CommandFn = int (*)(const std::vector<std::string>&, std::ostream&,
                          std::ostream&);

struct CommandEntry {
  const char* name;
  CommandFn fn;
  const char* blurb;
};

constexpr CommandEntry kCommands[] = {
    {"synth-bench", cmd_synth_bench,
     "Monte Carlo benchmark over an (INR, SINR) grid"},
    {"fit", cmd_fit, "fit the clustering model to a scenario directory"},
    {"select-order", cmd_select_order,
     "select the number of clusters by the phi-bar sweep"},
    {"ident-check", cmd_ident_check,
     "evaluate the identifiability conditions of a scenario"},
    {"hsi", cmd_hsi, "cluster a hyperspectral cube and render the label map"},
    {"synth-gen", cmd_synth_gen, "serialize a synthetic scenario directory"},
    {"cube-gen", cmd_cube_gen, "generate a synthetic labeled hypercube"},
};

void print_usage(std::ostream& stream) {
  stream << "usage: scos <command> [flags]\ncommands:\n";
  for (const auto& entry : kCommands)
    stream << "  " << entry.name << "  - " << entry.blurb << '\n';
  stream << "run `scos <command> --help` for the command's flags\n";
}

}  // namespace

template <typename Int>
void ConfigSchema::add_int(const std::string& name, Int& field) {
  entries_.push_back({name,
                      [name, &field](const std::string& v) {
                        field = static_cast<Int>(parse_integer(name, v));
                      },
                      [&field] { return std::to_string(field); }});
}

void ConfigSchema::add_double(const std::string& name, double& field) {
  entries_.push_back(
      {name, [&field](const std::string& v) { field = io::parse_double(v); },
       [&field] { return io::format_double(field); }});
}

void ConfigSchema::add_bool(const std::string& name, bool& field) {
  entries_.push_back({name,
                      [name, &field](const std::string& v) {
                        field = parse_bool(name, v);
                      },
                      [&field] { return std::string(field ? "1" : "0"); }});
}

ConfigSchema::ConfigSchema(RunConfig& config) {
  auto& c = config;
  add_int("scenario.n_ambient", c.scenario.n_ambient);
  add_int("scenario.n_views", c.scenario.n_views);
  add_int("scenario.n_clusters", c.scenario.n_clusters);
  add_int("scenario.subspace_dim", c.scenario.subspace_dim);
  add_int("scenario.view_cols", c.scenario.view_cols);
  add_double("scenario.sinr_db", c.scenario.sinr_db);
  add_double("scenario.inr", c.scenario.inr);
  add_int("scenario.seed", c.scenario.seed);
  entries_.push_back(
      {"solver.formulation",
       [&c](const std::string& v) { c.solver.formulation = parse_formulation(v); },
       [&c] { return std::string(formulation_name(c.solver.formulation)); }});
  add_double("solver.rho0", c.solver.rho0);
  add_double("solver.alpha", c.solver.alpha);
  add_double("solver.epsilon_psi", c.solver.epsilon_psi);
  add_int("solver.max_outer", c.solver.max_outer);
  add_int("solver.max_inner", c.solver.max_inner);
  add_double("solver.tol_rel", c.solver.tol_rel);
  add_int("solver.orthiter_steps", c.solver.orthiter_steps);
  entries_.push_back(
      {"solver.g_update",
       [&c](const std::string& v) { c.solver.g_update = parse_g_update(v); },
       [&c] { return std::string(g_update_name(c.solver.g_update)); }});
  add_int("solver.seed", c.solver.seed);
  add_bool("hsi.trace_penalty", c.reg.trace_penalty);
  add_bool("hsi.psi_smoothed", c.reg.psi_smoothed);
  add_bool("hsi.h_constraint", c.reg.h_constraint);
  add_double("hsi.epsilon_psi", c.reg.epsilon_psi);
  add_int("hsi.s_r", c.s_r);
  add_int("hsi.s_a", c.s_a);
  add_int("run.threads", c.threads);
}

void ConfigSchema::set(const std::string& key, const std::string& value,
                       KeySource source) {
  for (auto& entry : entries_) {
    if (entry.name == key) {
      entry.apply(value);
      sources_[key] = source;
      return;
    }
  }
  raise(ErrorCode::InvalidArgument, "unknown config key: " + key);
}

void ConfigSchema::apply_file(const std::filesystem::path& path) {
  for (const auto& [key, value] : io::read_kv(path))
    set(key, value, KeySource::File);
}

void ConfigSchema::write_resolved(const std::filesystem::path& dir) const {
  std::vector<std::pair<std::string, std::string>> resolved, sources;
  for (const auto& entry : entries_) {
    resolved.emplace_back(entry.name, entry.render());
    auto it = sources_.find(entry.name);
    sources.emplace_back(entry.name,
                         source_name(it == sources_.end() ? KeySource::Default
                                                          : it->second));
  }
  io::write_kv(dir / "resolved_config.txt", resolved);
  io::write_kv(dir / "config_sources.txt", sources);
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  if (args.empty()) {
    print_usage(err);
    return 2;
  }
  if (args[0] == "--help" || args[0] == "help") {
    print_usage(out);
    return 0;
  }
  for (const auto& entry : kCommands) {
    if (args[0] == entry.name) {
      std::vector<std::string> rest(args.begin() + 1, args.end());
      try {
        return entry.fn(rest, out, err);
      } catch (const Error& e) {
        err << e.what() << '\n';
        return 1;
      } catch (const std::exception& e) {
        err << "Internal: " << e.what() << '\n';
        return 1;
      }
    }
  }
  err << "unknown command: " << args[0] << '\n';
  print_usage(err);
  return 2;
}

}  // namespace scos::commands
