#include "scos.h"

#include "scos/commands.hpp"
#include "scos/solver.hpp"
#include "scos/subspace.hpp"
#include "scos/types.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <exception>
#include <iostream>
#include <new>
#include <sstream>
#include <string>
#include <vector>

struct scos_session {
  std::string last_error;
};

namespace {

scos_status map_code(scos::ErrorCode code) {
  using scos::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return SCOS_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return SCOS_ERR_DIMENSION_MISMATCH;
    case ErrorCode::LengthMismatch: return SCOS_ERR_LENGTH_MISMATCH;
    case ErrorCode::RankDeficient: return SCOS_ERR_RANK_DEFICIENT;
    case ErrorCode::InfeasibleConfig: return SCOS_ERR_INFEASIBLE_CONFIG;
    case ErrorCode::EmptyCluster: return SCOS_ERR_EMPTY_CLUSTER;
    case ErrorCode::NonFiniteValue: return SCOS_ERR_NON_FINITE_VALUE;
    case ErrorCode::MissingGroundTruth: return SCOS_ERR_MISSING_GROUND_TRUTH;
    case ErrorCode::FileNotFound: return SCOS_ERR_FILE_NOT_FOUND;
    case ErrorCode::FormatError: return SCOS_ERR_FORMAT;
    case ErrorCode::ShapeMismatch: return SCOS_ERR_SHAPE_MISMATCH;
    case ErrorCode::IoError: return SCOS_ERR_IO;
    case ErrorCode::Internal: return SCOS_ERR_INTERNAL;
  }
  return SCOS_ERR_INTERNAL;
}

scos_status fail(scos_session* session, scos_status status,
                 const std::string& message) {
  if (session) session->last_error = message;
  return status;
}

}  // namespace

extern "C" {

const char* scos_version(void) { return "1.0.0"; }

const char* scos_status_name(scos_status status) {
  switch (status) {
    case SCOS_OK: return "Ok";
    case SCOS_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case SCOS_ERR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case SCOS_ERR_LENGTH_MISMATCH: return "LengthMismatch";
    case SCOS_ERR_RANK_DEFICIENT: return "RankDeficient";
    case SCOS_ERR_INFEASIBLE_CONFIG: return "InfeasibleConfig";
    case SCOS_ERR_EMPTY_CLUSTER: return "EmptyCluster";
    case SCOS_ERR_NON_FINITE_VALUE: return "NonFiniteValue";
    case SCOS_ERR_MISSING_GROUND_TRUTH: return "MissingGroundTruth";
    case SCOS_ERR_FILE_NOT_FOUND: return "FileNotFound";
    case SCOS_ERR_FORMAT: return "FormatError";
    case SCOS_ERR_SHAPE_MISMATCH: return "ShapeMismatch";
    case SCOS_ERR_IO: return "IoError";
    case SCOS_ERR_INTERNAL: return "Internal";
  }
  return "Internal";
}

scos_session* scos_session_new(void) {
  return new (std::nothrow) scos_session{};
}

void scos_session_free(scos_session* session) { delete session; }

const char* scos_last_error(const scos_session* session) {
  return session ? session->last_error.c_str() : "";
}

int scos_run_command(scos_session* session, int argc,
                     const char* const* argv) {
  if (argc < 0 || (argc > 0 && !argv)) {
    if (session) session->last_error = "invalid argv";
    return 2;
  }
  std::vector<std::string> args;
  args.reserve(static_cast<std::size_t>(argc));
  for (int i = 0; i < argc; ++i) args.emplace_back(argv[i] ? argv[i] : "");

  std::ostringstream captured;
  int code = scos::commands::run(args, std::cout, captured);
  std::string text = captured.str();
  if (!text.empty()) std::cerr << text;
  if (session) session->last_error = code == 0 ? "" : text;
  return code;
}

scos_status scos_fit(scos_session* session, int64_t n_ambient,
                     int64_t n_views, const int64_t* view_cols,
                     const double* views, int64_t n_clusters,
                     const int64_t* dims, const char* const* config_kv,
                     int64_t n_config, int* labels_out, double* phi_out) {
  if (session) session->last_error.clear();
  if (n_ambient < 1 || n_views < 1 || !view_cols || !views || !labels_out)
    return fail(session, SCOS_ERR_INVALID_ARGUMENT,
                "scos_fit: null buffer or nonpositive size");
  if (n_clusters < 1 || !dims)
    return fail(session, SCOS_ERR_INVALID_ARGUMENT,
                "scos_fit: n_clusters must be >= 1 with dims provided");
  if (n_config > 0 && !config_kv)
    return fail(session, SCOS_ERR_INVALID_ARGUMENT,
                "scos_fit: n_config > 0 with null config_kv");

  try {
    scos::commands::RunConfig config;
    scos::commands::ConfigSchema schema(config);
    for (int64_t i = 0; i < n_config; ++i) {
      std::string entry = config_kv[i] ? config_kv[i] : "";
      std::size_t split = entry.find('=');
      scos::require(split != std::string::npos, scos::ErrorCode::InvalidArgument,
                    "config entry must be key=value, got \"" + entry + "\"");
      schema.set(entry.substr(0, split), entry.substr(split + 1),
                 scos::commands::KeySource::Flag);
    }

    scos::ViewList bases;
    bases.reserve(static_cast<std::size_t>(n_views));
    const double* cursor = views;
    for (int64_t k = 0; k < n_views; ++k) {
      scos::require(view_cols[k] >= 1, scos::ErrorCode::InvalidArgument,
                    "scos_fit: view_cols entries must be >= 1");
      Eigen::Map<const scos::Matrix> block(cursor, n_ambient, view_cols[k]);
      bases.push_back(scos::truncated_basis(block));
      cursor += n_ambient * view_cols[k];
    }

    std::vector<scos::Index> dim_list(dims, dims + n_clusters);
    scos::solver::FitResult result =
        scos::solver::fit(bases, n_clusters, dim_list, config.solver);
    std::vector<int> labels = scos::solver::assign_labels(result.model.c);
    for (int64_t k = 0; k < n_views; ++k)
      labels_out[k] = labels[static_cast<std::size_t>(k)];
    if (phi_out) {
      scos::Vector phi = scos::solver::view_fit_phi(bases, result.model);
      for (int64_t k = 0; k < n_views; ++k) phi_out[k] = phi(k);
    }
    return SCOS_OK;
  } catch (const scos::Error& e) {
    return fail(session, map_code(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(session, SCOS_ERR_INTERNAL, e.what());
  }
}

}  // extern "C"
