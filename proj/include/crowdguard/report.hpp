#pragma once

#include <string>

#include "crowdguard/adversary.hpp"
#include "crowdguard/experiment.hpp"
#include "crowdguard/subspace.hpp"

namespace crowdguard {

/// Flat key/value config document. Unknown keys are rejected; missing keys
/// keep their defaults. Annotator indices are 1-based in the file.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

/// Full experiment report: version stamp, config echo, per-method
/// mean/std/values. Deterministic byte-for-byte given equal inputs.
std::string report_to_json(const MetricsReport& report, const std::string& version);

/// Long-format rows `method,metric,mean,std,reps,failures`.
std::string report_to_csv(const MetricsReport& report);

std::string sweep_to_json(const SweepReport& report, const std::string& version);

/// Long-format rows `axis,value,method,metric,mean,std`.
std::string sweep_to_csv(const SweepReport& report);

std::string attack_truth_to_json(const AttackGroundTruth& truth);
std::string partition_to_json(const AnnotatorPartition& partition);

/// Rows `item,label,max_posterior`, 1-based items, label 0 for abstentions.
std::string aggregation_to_csv(const AggregationResult& result);

/// Fitted model parameters: priors, per-annotator confusion matrices, and
/// the likelihood trace.
std::string model_to_json(const DsModel& model);

void write_text(const std::string& path, const std::string& text);
void write_matrix_csv(const Matrix& m, const std::string& path);

}  // namespace crowdguard
