#include "scos/ident.hpp"

#include "scos/io.hpp"

#include <Eigen/Dense>

#include <sstream>
#include <string>

namespace scos::ident {

namespace {

constexpr const char* kCaveat =
    "bounds assume generic factors; genericity of the supplied blocks is "
    "not machine-checkable, and the rank proxy only certifies the maximal "
    "coupling rank for these exact matrices";

// Full column rank of [G_1..G_R, H_1..H_K]. More columns than rows can
// never qualify, so the expensive factorization is skipped outright.
bool stacked_full_rank(const std::vector<Matrix>& bases,
                       const std::vector<Matrix>& interferers, Index n) {
  Index cols = 0;
  for (const auto& g : bases) cols += g.cols();
  for (const auto& h : interferers) cols += h.cols();
  if (cols > n) return false;
  Matrix stacked(n, cols);
  Index at = 0;
  for (const auto& g : bases) {
    stacked.middleCols(at, g.cols()) = g;
    at += g.cols();
  }
  for (const auto& h : interferers) {
    stacked.middleCols(at, h.cols()) = h;
    at += h.cols();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  return qr.rank() == cols;
}

}  // namespace

IdentReport check_identifiability(const synth::Scenario& scenario) {
  const auto& views = scenario.views;
  const auto& labels = scenario.labels;
  const auto& bases = scenario.true_bases;
  const auto& interferers = scenario.interferers;

  require(!views.empty(), ErrorCode::MissingGroundTruth,
          "scenario has no views");
  require(!bases.empty(), ErrorCode::MissingGroundTruth,
          "scenario has no true bases");
  require(labels.size() == views.size(), ErrorCode::MissingGroundTruth,
          "scenario labels do not cover the views");
  require(interferers.size() == views.size(), ErrorCode::MissingGroundTruth,
          "scenario has no interference blocks (lost on save/load)");

  const Index n = bases[0].rows();
  const Index r_clusters = static_cast<Index>(bases.size());
  const Index k_views = static_cast<Index>(views.size());
  for (const auto& g : bases) {
    require(g.rows() == n, ErrorCode::DimensionMismatch,
            "true bases disagree on the ambient dimension");
    require(g.cols() >= 1, ErrorCode::InvalidArgument,
            "true basis with no columns");
  }

  IdentReport report;
  report.alpha.assign(static_cast<std::size_t>(r_clusters), 0);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    require(labels[k] >= 1 && labels[k] <= static_cast<int>(r_clusters),
            ErrorCode::InvalidArgument, "label outside 1..R");
    ++report.alpha[static_cast<std::size_t>(labels[k] - 1)];
  }
  for (std::size_t k = 0; k < views.size(); ++k) {
    const Index l = bases[static_cast<std::size_t>(labels[k] - 1)].cols();
    require(views[k].rows() == n, ErrorCode::DimensionMismatch,
            "view rows disagree with the true bases");
    require(interferers[k].rows() == n, ErrorCode::DimensionMismatch,
            "interference block rows disagree with the true bases");
    require(interferers[k].cols() == views[k].cols() - l,
            ErrorCode::DimensionMismatch,
            "interference block does not complement the cluster basis");
  }

  // Sample-count side in exact integers: sum_r (1+alpha_r) L_r^2
  // + sum_k M_k (M_k - 2 L_{r_k}); the second sum may be negative.
  report.lhs_i = static_cast<long long>(n) * static_cast<long long>(n);
  report.rhs_i = 0;
  for (Index r = 0; r < r_clusters; ++r) {
    const long long l = bases[static_cast<std::size_t>(r)].cols();
    report.rhs_i += (1 + report.alpha[static_cast<std::size_t>(r)]) * l * l;
  }
  for (std::size_t k = 0; k < views.size(); ++k) {
    const long long m = views[k].cols();
    const long long l = bases[static_cast<std::size_t>(labels[k] - 1)].cols();
    report.rhs_i += m * (m - 2 * l);
  }
  report.condition_i = report.lhs_i >= report.rhs_i;

  Index alpha_min = report.alpha[0];
  for (Index a : report.alpha) alpha_min = std::min(alpha_min, a);
  report.condition_ii_max = static_cast<double>(r_clusters + k_views);
  report.condition_ii_bound = static_cast<double>(r_clusters + k_views + 1) -
                              0.5 * static_cast<double>(alpha_min);
  report.condition_ii_proxy = stacked_full_rank(bases, interferers, n);
  report.caveat = kCaveat;
  return report;
}

std::string format_report(const IdentReport& report) {
  Index k_views = 0;
  for (Index a : report.alpha) k_views += a;
  std::ostringstream out;
  out << "identifiability report\n";
  out << "  clusters R=" << report.alpha.size() << ", views K=" << k_views
      << ", cluster sizes alpha = [";
  for (std::size_t r = 0; r < report.alpha.size(); ++r)
    out << (r ? ", " : "") << report.alpha[r];
  out << "]\n";
  out << "  sample-count check: N^2 = " << report.lhs_i
      << (report.condition_i ? " >= " : " < ") << report.rhs_i << " -> "
      << (report.condition_i ? "satisfied" : "VIOLATED") << "\n";
  out << "  coupling-rank requirement: >= "
      << io::format_double(report.condition_ii_bound) << " of at most "
      << io::format_double(report.condition_ii_max) << "\n";
  out << "  full-column-rank proxy: "
      << (report.condition_ii_proxy
              ? "holds (certifies the maximal coupling rank)"
              : "fails (coupling rank not certified)")
      << "\n";
  out << "  note: " << report.caveat << "\n";
  return out.str();
}

std::vector<std::pair<std::string, std::string>> report_kv(
    const IdentReport& report) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("condition_i", report.condition_i ? "1" : "0");
  kv.emplace_back("lhs_i", std::to_string(report.lhs_i));
  kv.emplace_back("rhs_i", std::to_string(report.rhs_i));
  kv.emplace_back("condition_ii_bound",
                  io::format_double(report.condition_ii_bound));
  kv.emplace_back("condition_ii_max",
                  io::format_double(report.condition_ii_max));
  kv.emplace_back("condition_ii_proxy", report.condition_ii_proxy ? "1" : "0");
  std::string alpha;
  for (std::size_t r = 0; r < report.alpha.size(); ++r) {
    if (r) alpha += ';';
    alpha += std::to_string(report.alpha[r]);
  }
  kv.emplace_back("alpha", alpha);
  kv.emplace_back("caveat", report.caveat);
  return kv;
}

}  // namespace scos::ident
