#ifndef SCOS_IDENT_HPP
#define SCOS_IDENT_HPP

#include "scos/synth.hpp"
#include "scos/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace scos::ident {

// Recovery-guarantee checks for a scenario with known ground truth. Two
// conditions are evaluated: a sample-count inequality
//   N^2 >= sum_r (1+alpha_r) L_r^2 + sum_k M_k (M_k - 2 L_{r_k})
// computed in exact integer arithmetic, and a coupling-rank requirement on
// the stacked ground-truth blocks, reported as the required bound plus a
// full-column-rank proxy for [G_1..G_R, H_1..H_K] (full rank certifies the
// largest attainable value, R+K).
struct IdentReport {
  bool condition_i = false;
  long long lhs_i = 0;  // N^2
  long long rhs_i = 0;  // sample-count side, exact integer
  double condition_ii_bound = 0.0;  // R+K+1 - alpha_min/2; may be half-integer
  double condition_ii_max = 0.0;    // R+K, the ceiling the proxy certifies
  bool condition_ii_proxy = false;
  std::vector<Index> alpha;  // views per cluster; sums to K
  std::string caveat;        // genericity disclaimer, included in all output
};

// Evaluates both conditions from the scenario's labels, true bases, and
// interference blocks. Throws MissingGroundTruth when any of those are
// absent (for example after a save/load round trip, which drops H_k).
IdentReport check_identifiability(const synth::Scenario& scenario);

// Multi-line human-readable rendering, caveat included.
std::string format_report(const IdentReport& report);

// Flat key=value rows for CSV output; alpha is semicolon-joined.
std::vector<std::pair<std::string, std::string>> report_kv(
    const IdentReport& report);

}  // namespace scos::ident

#endif
