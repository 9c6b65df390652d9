#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rwz/core.hpp"
#include "rwz/mc.hpp"

namespace rwz {

struct AuditCandidate {
  std::string label;
  double oracle = 0.0;    // predicted value, or the worst residual for the drift audit
  double observed = 0.0;  // MC value or tolerance scale
  double score = 0.0;     // |observed - oracle| / stderr, or residual / tolerance
  bool consistent = false;
};

struct AuditReport {
  std::string name;
  std::string question;
  std::string adopted;  // label of the candidate the library uses
  std::vector<AuditCandidate> candidates;
  std::vector<std::string> evidence;
  MCEstimate mc;
  bool decided = false;  // evidence singles out the adopted form
  nlohmann::json to_json() const;
};

struct AuditOptions {
  int n_reps = 0;  // 0: per-audit default
  std::uint64_t seed = 20240601;
  RunOptions run;
};

// MC variance of a Gaussian linear statistic on Poisson(c = 2) against densities c and c^2.
AuditReport audit_poisson_density(const AuditOptions& opt = {});

// Sum rules of both Ginibre pairs and an MC linear statistic on n = 196 eigenvalues.
AuditReport audit_ginibre_pair(const AuditOptions& opt = {});

// Central differences of Delta_a Pi at z != 0 under four drift forms, against V.
AuditReport audit_delta_pi_drift(const AuditOptions& opt = {});

std::vector<AuditReport> run_audits(const AuditOptions& opt = {});

}  // namespace rwz
