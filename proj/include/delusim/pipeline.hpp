#pragma once

#include <string>
#include <vector>

#include "delusim/config.hpp"
#include "delusim/manifest.hpp"

namespace delusim::pipeline {

inline const std::vector<std::string> kStageOrder = {
    "ingest",      "cohorts",  "covariates", "match",  "train-scorer", "eval-scorer",
    "simulate",    "score",    "analyze",    "themes", "report"};

// Runs one stage under the run directory, updating the manifest. Throws
// DependencyError when a prerequisite stage has not completed.
void run_stage(const std::string& stage, const config::RunConfig& cfg);

// All stages in order.
void run_all(const config::RunConfig& cfg);

}  // namespace delusim::pipeline
