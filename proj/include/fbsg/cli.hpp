#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fbsg {

// Command-line overrides on top of the config file's run block.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<int> steps;
  std::optional<int> workers;
  std::string out = ".";
};

struct ConfigResult {
  nlohmann::json config;
  std::vector<std::string> violations;  // all of them, not just the first

  bool ok() const { return violations.empty(); }
};

// Parses and validates a scenario config. Validation re-checks every invariant
// of the modules the selected task touches and reports the full list of
// violations.
ConfigResult load_config(const std::string& path);

// Runs one task and writes results.csv (tabular, one-line header) plus
// summary.txt (nested key-value scalars and a reproducibility stanza) into
// overrides.out. Returns the process exit status: 0 on success, nonzero when
// a module reports an error or a verification fails.
int run_task(const nlohmann::json& config, const std::string& task,
             const RunOverrides& overrides);

extern const char* const kKnownTasks[5];
extern const char* const kArtifactVersion;

}  // namespace fbsg
