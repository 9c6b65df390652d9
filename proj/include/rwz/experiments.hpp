#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rwz/mc.hpp"

namespace rwz {

// One verified claim inside an experiment. `detail` carries the numbers.
struct Check {
  std::string name;
  bool pass = false;
  nlohmann::json detail;
};

struct ExperimentResult {
  std::string experiment;
  std::string model;
  nlohmann::json params;
  std::vector<Check> checks;
  std::optional<Verdict> primary;  // headline MC comparison, if any
  nlohmann::json oracle;           // reported when there is no primary
  std::vector<std::pair<MultiRun, std::vector<std::string>>> replicate_sets;

  bool pass() const;
  // {experiment, model, params, n_reps, base_seed, oracle, mc_mean, mc_variance, stderr, verdict, checks}
  nlohmann::json report() const;
  void write_replicates_csv(const std::string& path) const;  // seed,stat,re,im
};

struct ExperimentSpec {
  std::string name;
  std::string summary;
  nlohmann::json defaults;  // every accepted knob with its default
  std::function<ExperimentResult(const nlohmann::json& params, const RunOptions& run)> body;
};

const std::vector<ExperimentSpec>& experiment_registry();
const ExperimentSpec& find_experiment(const std::string& name);  // ParameterError if unknown

// Defaults overlaid with `overrides`; unknown keys or mistyped values throw ParameterError.
nlohmann::json resolve_params(const ExperimentSpec& spec, const nlohmann::json& overrides);

ExperimentResult run_experiment(const std::string& name, const nlohmann::json& overrides = nlohmann::json::object(),
                                const RunOptions& run = {});

}  // namespace rwz
