#pragma once

// File formats: longitudinal/survival CSV, model and scenario JSON, fit.json,
// curve CSVs. Every writer replaces its target atomically.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "jmlgm/inference.hpp"
#include "jmlgm/model.hpp"
#include "jmlgm/oracle.hpp"
#include "jmlgm/predict.hpp"
#include "jmlgm/simulate.hpp"

namespace jmlgm::io {

using Json = nlohmann::ordered_json;

/// Header `id,time,y[,x1,...]`. Errors name the 1-based file line.
void read_long_csv(const std::filesystem::path& path, model::JointData& data);
/// Header `id,time,event[,z1,...]`, event 1 = observed, 0 = censored.
void read_surv_csv(const std::filesystem::path& path, model::JointData& data);
void read_long_csv(std::istream& in, const std::string& label, model::JointData& data);
void read_surv_csv(std::istream& in, const std::string& label, model::JointData& data);

std::string long_csv(const model::JointData& data);
std::string surv_csv(const model::JointData& data);

Json read_json(const std::filesystem::path& path);

model::ModelConfig parse_model_config(const Json& j);
Json model_config_json(const model::ModelConfig& config);

sim::Scenario parse_scenario(const Json& j);
Json truth_json(const sim::Scenario& scenario, const sim::Simulated& sim);

Json fit_json(const inference::FitResult& fit);
inference::FitResult parse_fit(const Json& j);

Json oracle_json(const oracle::McmcResult& result);

std::string curve_csv(const std::vector<predict::SurvivalCurve>& curves);
std::string trajectory_csv(const std::vector<std::pair<int, std::vector<predict::TrajectoryPoint>>>& trajectories);

/// Serializes with two-space indentation; doubles are written with 17
/// significant digits so they read back exactly.
std::string dump(const Json& j);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace jmlgm::io
