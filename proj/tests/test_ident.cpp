#include "doctest.h"

#include "scos/ident.hpp"
#include "scos/io.hpp"
#include "scos/rng.hpp"
#include "scos/synth.hpp"
#include "support/oracles.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

using scos::Error;
using scos::ErrorCode;
using scos::Index;
using scos::Matrix;
using scos::Philox;
namespace ident = scos::ident;
namespace synth = scos::synth;

namespace {

// Scenario whose ground-truth blocks are slices of one orthonormal frame,
// so the stacked [G_1..G_R, H_1..H_K] matrix has exactly orthonormal
// columns. Views are the concatenation [G_{r_k}, H_k].
synth::Scenario orthogonal_scenario(Index n, const std::vector<int>& labels,
                                    const std::vector<Index>& dims,
                                    const std::vector<Index>& view_cols,
                                    std::uint64_t seed) {
  Index total = 0;
  for (Index l : dims) total += l;
  for (std::size_t k = 0; k < labels.size(); ++k)
    total += view_cols[k] - dims[static_cast<std::size_t>(labels[k] - 1)];
  REQUIRE(total <= n);

  Philox rng(seed);
  Matrix frame = oracle::random_orthonormal(rng, n, total);

  synth::Scenario sc;
  sc.labels = labels;
  Index at = 0;
  for (Index l : dims) {
    sc.true_bases.push_back(frame.middleCols(at, l));
    at += l;
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    Index l = dims[static_cast<std::size_t>(labels[k] - 1)];
    Index h_cols = view_cols[k] - l;
    sc.interferers.push_back(frame.middleCols(at, h_cols));
    at += h_cols;
    Matrix view(n, view_cols[k]);
    view.leftCols(l) = sc.true_bases[static_cast<std::size_t>(labels[k] - 1)];
    view.rightCols(h_cols) = sc.interferers.back();
    sc.views.push_back(view);
  }
  return sc;
}

// Shape-only scenario (zero content) for arithmetic checks where the
// matrices' span is irrelevant.
synth::Scenario shaped_scenario(Index n, const std::vector<int>& labels,
                                const std::vector<Index>& dims,
                                const std::vector<Index>& view_cols) {
  synth::Scenario sc;
  sc.labels = labels;
  for (Index l : dims) sc.true_bases.push_back(Matrix::Zero(n, l));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    Index l = dims[static_cast<std::size_t>(labels[k] - 1)];
    sc.interferers.push_back(Matrix::Zero(n, view_cols[k] - l));
    sc.views.push_back(Matrix::Zero(n, view_cols[k]));
  }
  return sc;
}

template <typename Fn>
ErrorCode thrown_code(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;  // sentinel: nothing was thrown
}

std::string kv_value(
    const std::vector<std::pair<std::string, std::string>>& kv,
    const std::string& key) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  return "<missing>";
}

}  // namespace

TEST_CASE("ident: balanced worked examples hit the stated bounds") {
  // R=2, K=4, two views per cluster: 2+4+1-1 = 6, the largest value the
  // stacked matrix can attain.
  auto sc4 = orthogonal_scenario(30, {1, 1, 2, 2}, {2, 2}, {3, 3, 3, 3}, 7);
  auto rep4 = ident::check_identifiability(sc4);
  CHECK(rep4.condition_ii_bound == 6.0);
  CHECK(rep4.condition_ii_max == 6.0);
  CHECK(rep4.alpha == std::vector<Index>{2, 2});
  CHECK(rep4.condition_ii_proxy);

  // R=2, K=8, four views per cluster: 2+8+1-2 = 9 out of a possible 10.
  auto sc8 = orthogonal_scenario(40, {1, 1, 1, 1, 2, 2, 2, 2}, {2, 2},
                                 std::vector<Index>(8, 3), 9);
  auto rep8 = ident::check_identifiability(sc8);
  CHECK(rep8.condition_ii_bound == 9.0);
  CHECK(rep8.condition_ii_max == 10.0);
  CHECK(rep8.alpha == std::vector<Index>{4, 4});
  CHECK(rep8.condition_ii_proxy);

  // Odd minimum cluster size leaves a half-integer requirement:
  // R=2, K=3, alpha={1,2}: 2+3+1-0.5 = 5.5.
  auto sc3 = orthogonal_scenario(20, {1, 2, 2}, {2, 2}, {3, 3, 3}, 11);
  auto rep3 = ident::check_identifiability(sc3);
  CHECK(rep3.condition_ii_bound == 5.5);
  CHECK(rep3.alpha == std::vector<Index>{1, 2});
}

TEST_CASE("ident: sample-count sides at the benchmark sizes") {
  // N=1000, R=5, L=20, K=100, M=50, 20 views per cluster:
  // 10^6 >= 5*(1+20)*400 + 100*50*(50-40) = 42000 + 50000 = 92000.
  std::vector<int> labels(100);
  for (std::size_t k = 0; k < labels.size(); ++k)
    labels[k] = 1 + static_cast<int>(k / 20);
  auto sc = shaped_scenario(1000, labels, std::vector<Index>(5, 20),
                            std::vector<Index>(100, 50));
  auto rep = ident::check_identifiability(sc);
  CHECK(rep.lhs_i == 1000000);
  CHECK(rep.rhs_i == 92000);
  CHECK(rep.condition_i);
  CHECK(rep.condition_ii_bound == doctest::Approx(96.0));
  // 100 + 3000 ground-truth columns cannot be independent in 1000 rows.
  CHECK_FALSE(rep.condition_ii_proxy);
}

TEST_CASE("ident: sample-count side equals the squared-residual form") {
  // Independent re-derivation: sum_r L_r^2 + sum_k (M_k - L_{r_k})^2, an
  // exact-integer rearrangement of the reported right-hand side.
  Philox rng(2026);
  for (int trial = 0; trial < 20; ++trial) {
    Index r_clusters = 1 + static_cast<Index>(rng.uniform_index(4));
    Index k_views =
        r_clusters + static_cast<Index>(rng.uniform_index(7));
    std::vector<int> labels;
    for (Index r = 0; r < r_clusters; ++r)
      labels.push_back(static_cast<int>(r) + 1);
    while (static_cast<Index>(labels.size()) < k_views)
      labels.push_back(
          1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(
                  r_clusters))));
    std::vector<Index> dims;
    for (Index r = 0; r < r_clusters; ++r)
      dims.push_back(1 + static_cast<Index>(rng.uniform_index(4)));
    std::vector<Index> view_cols;
    for (int lab : labels)
      view_cols.push_back(dims[static_cast<std::size_t>(lab - 1)] +
                          static_cast<Index>(rng.uniform_index(4)));
    Index n = 8 + static_cast<Index>(rng.uniform_index(13));

    auto rep = ident::check_identifiability(
        shaped_scenario(n, labels, dims, view_cols));

    long long rhs_resid = 0;
    for (Index l : dims) rhs_resid += static_cast<long long>(l) * l;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      long long h =
          view_cols[k] - dims[static_cast<std::size_t>(labels[k] - 1)];
      rhs_resid += h * h;
    }
    CHECK(rep.rhs_i == rhs_resid);
    CHECK(rep.lhs_i == static_cast<long long>(n) * n);
    CHECK(rep.condition_i == (rep.lhs_i >= rep.rhs_i));

    long long alpha_sum = 0;
    for (Index a : rep.alpha) alpha_sum += a;
    CHECK(alpha_sum == static_cast<long long>(k_views));
  }
}

TEST_CASE("ident: generated scenario passes the rank proxy") {
  synth::ScenarioConfig config;
  config.n_ambient = 40;
  config.n_views = 6;
  config.n_clusters = 2;
  config.subspace_dim = 3;
  config.view_cols = 5;
  config.seed = 17;
  auto sc = synth::generate(config);

  auto rep = ident::check_identifiability(sc);
  CHECK(rep.condition_ii_proxy);
  CHECK(rep.lhs_i == 1600);
  // (R+K)*L^2 + K*M*(M-2L) = 8*9 + 6*5*(5-6) = 42, whatever the label draw.
  CHECK(rep.rhs_i == 42);
  CHECK(rep.condition_i);
  std::vector<Index> histogram(2, 0);
  for (int lab : sc.labels) ++histogram[static_cast<std::size_t>(lab - 1)];
  CHECK(rep.alpha == histogram);
  Index alpha_min = std::min(histogram[0], histogram[1]);
  CHECK(rep.condition_ii_bound ==
        2 + 6 + 1 - 0.5 * static_cast<double>(alpha_min));
  CHECK(rep.condition_ii_max == 8.0);

  SUBCASE("duplicating a basis column defeats the proxy") {
    sc.interferers[0].col(0) = sc.true_bases[0].col(0);
    auto broken = ident::check_identifiability(sc);
    CHECK_FALSE(broken.condition_ii_proxy);
    CHECK(broken.condition_i == rep.condition_i);
    CHECK(broken.rhs_i == rep.rhs_i);
  }
}

TEST_CASE("ident: more ground-truth columns than rows fails the proxy") {
  auto sc = shaped_scenario(10, {1, 1, 2}, {3, 3}, {5, 5, 5});
  auto rep = ident::check_identifiability(sc);
  CHECK_FALSE(rep.condition_ii_proxy);
  CHECK(rep.lhs_i == 100);
  // 2*(1+...): alpha = {2,1}: (1+2)*9 + (1+1)*9 + 3*5*(5-6) = 45 - 15.
  CHECK(rep.rhs_i == 30);
}

TEST_CASE("ident: missing ground truth is reported as such") {
  synth::ScenarioConfig config;
  config.n_ambient = 30;
  config.n_views = 4;
  config.n_clusters = 2;
  config.subspace_dim = 2;
  config.view_cols = 4;
  config.seed = 5;
  auto sc = synth::generate(config);

  SUBCASE("round-tripped scenarios lose the interference blocks") {
    auto dir = std::filesystem::temp_directory_path() / "scos_ident_rt";
    synth::save_scenario(sc, dir);
    auto loaded = synth::load_scenario(dir);
    std::filesystem::remove_all(dir);
    CHECK(thrown_code([&] { ident::check_identifiability(loaded); }) ==
          ErrorCode::MissingGroundTruth);
  }
  SUBCASE("no true bases") {
    sc.true_bases.clear();
    CHECK(thrown_code([&] { ident::check_identifiability(sc); }) ==
          ErrorCode::MissingGroundTruth);
  }
  SUBCASE("label list of the wrong length") {
    sc.labels.pop_back();
    CHECK(thrown_code([&] { ident::check_identifiability(sc); }) ==
          ErrorCode::MissingGroundTruth);
  }
}

TEST_CASE("ident: inconsistent ground-truth shapes are rejected") {
  auto make = [] {
    return orthogonal_scenario(20, {1, 2, 2}, {2, 3}, {4, 4, 5}, 21);
  };
  SUBCASE("interferer with the wrong row count") {
    auto sc = make();
    sc.interferers[0] = Matrix::Zero(19, sc.interferers[0].cols());
    CHECK(thrown_code([&] { ident::check_identifiability(sc); }) ==
          ErrorCode::DimensionMismatch);
  }
  SUBCASE("interferer with the wrong column count") {
    auto sc = make();
    sc.interferers[1] = Matrix::Zero(20, sc.interferers[1].cols() + 1);
    CHECK(thrown_code([&] { ident::check_identifiability(sc); }) ==
          ErrorCode::DimensionMismatch);
  }
  SUBCASE("out-of-range label") {
    auto sc = make();
    sc.labels[0] = 3;
    CHECK(thrown_code([&] { ident::check_identifiability(sc); }) ==
          ErrorCode::InvalidArgument);
  }
}

TEST_CASE("ident: report renders as text and key-value rows") {
  auto sc = orthogonal_scenario(30, {1, 1, 2, 2}, {2, 2}, {3, 3, 3, 3}, 7);
  auto rep = ident::check_identifiability(sc);

  auto text = ident::format_report(rep);
  CHECK(text.find("generic") != std::string::npos);
  CHECK(text.find("900") != std::string::npos);  // 30^2

  auto kv = ident::report_kv(rep);
  CHECK(kv_value(kv, "condition_i") == "1");
  CHECK(kv_value(kv, "lhs_i") == "900");
  CHECK(kv_value(kv, "rhs_i") == "12");  // 3*4*2 + 4*3*(3-4) = 24 - 12
  CHECK(kv_value(kv, "condition_ii_bound") == "6");
  CHECK(kv_value(kv, "condition_ii_max") == "6");
  CHECK(kv_value(kv, "condition_ii_proxy") == "1");
  CHECK(kv_value(kv, "alpha") == "2;2");
  CHECK(kv_value(kv, "caveat") != "<missing>");

  auto dir = std::filesystem::temp_directory_path() / "scos_ident_kv";
  std::filesystem::create_directories(dir);
  scos::io::write_kv(dir / "report.csv", kv);
  auto back = scos::io::read_kv(dir / "report.csv");
  std::filesystem::remove_all(dir);
  CHECK(back == kv);
}
