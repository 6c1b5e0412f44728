#ifndef SCOS_COMMANDS_HPP
#define SCOS_COMMANDS_HPP

#include "scos/hsi.hpp"
#include "scos/solver.hpp"
#include "scos/synth.hpp"
#include "scos/types.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace scos::commands {

// One schema-validated key-value view over the module configs. Files and
// flags funnel through the same setters, so precedence (defaults, then
// file, then flags) and provenance are uniform across commands and the
// shared-library entry points.
struct RunConfig {
  synth::ScenarioConfig scenario;
  solver::SolverConfig solver;
  hsi::HsiRegConfig reg;
  Index s_r = 3;
  Index s_a = 3;
  int threads = 0;
};

enum class KeySource { Default, File, Flag };

class ConfigSchema {
 public:
  explicit ConfigSchema(RunConfig& config);

  // Parses and stores one value; unknown keys and malformed values raise
  // InvalidArgument.
  void set(const std::string& key, const std::string& value, KeySource source);

  // Applies every key=value line of the file with File provenance.
  void apply_file(const std::filesystem::path& path);

  // Effective values plus where each one came from.
  void write_resolved(const std::filesystem::path& dir) const;

 private:
  struct Entry {
    std::string name;
    std::function<void(const std::string&)> apply;
    std::function<std::string()> render;
  };

  template <typename Int>
  void add_int(const std::string& name, Int& field);
  void add_double(const std::string& name, double& field);
  void add_bool(const std::string& name, bool& field);

  std::vector<Entry> entries_;
  std::map<std::string, KeySource> sources_;
};

// Dispatches one CLI invocation (args exclude the program name, so
// args[0] is the command). Returns the process exit code: 0 on success,
// 1 when a module raises at runtime (the error name and message go to
// err), 2 on unknown commands, bad flags, or invalid configuration keys
// (usage goes to err).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace scos::commands

#endif
