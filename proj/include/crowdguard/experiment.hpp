#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crowdguard/adversary.hpp"
#include "crowdguard/aggregation.hpp"
#include "crowdguard/annotations.hpp"
#include "crowdguard/rpca.hpp"
#include "crowdguard/subspace.hpp"

namespace crowdguard {

enum class Method {
  MajorityVote,  // MV
  DsEm,          // DS
  Alg1Majority,  // ALG1_H: detection with the majority-honest assumption
  Alg1Trusted,   // ALG1_TA: detection anchored on trusted annotators
};

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct SyntheticSpec {
  Index num_annotators = 60;
  Index num_items = 5000;
  int num_classes = 3;
  double p_obs = 0.2;  // honest response probability
};

struct ExperimentConfig {
  std::string dataset_path;  // empty runs on synthetic data
  AnnotationFormat dataset_format = AnnotationFormat::TripletCsv;
  std::string truth_path;  // gold labels, required for file datasets
  SyntheticSpec synthetic;
  AttackConfig attack;
  std::vector<Method> methods = {Method::MajorityVote, Method::DsEm, Method::Alg1Majority};
  std::vector<Index> trusted;  // ALG1_TA anchors; empty draws one honest annotator per repetition
  int repetitions = 1;
  std::vector<double> rho_grid = default_rho_grid();
  int min_overlap = 5;
  EmConfig em;
  RpcaConfig rpca;
  RhoSelection rho_selection = RhoSelection::MinClusterScore;
  bool abstain_incorrect = true;  // score abstentions as misses
  std::uint64_t seed = 1;
};

struct MethodStats {
  Method method = Method::MajorityVote;
  // Metric name -> per-repetition values for the repetitions that succeeded,
  // in repetition order. Detection metrics appear only for ALG1 variants.
  std::vector<std::pair<std::string, std::vector<double>>> metrics;
  int failures = 0;
  std::vector<std::string> failure_messages;

  const std::vector<double>& metric(const std::string& name) const;
};

struct MetricsReport {
  ExperimentConfig config;
  Index annotators_loaded = 0;  // before constant-annotator removal
  Index annotators_used = 0;    // after
  std::vector<MethodStats> stats;
};

struct DetectionMetrics {
  double sensitivity = 1.0;
  double specificity = 1.0;
  double clustering_accuracy = 1.0;
};

/// Sensitivity |A_hat & A|/|A| (1 when no adversaries exist), specificity
/// |H_hat & H|/|H|, and the fraction of annotators put in their true group.
DetectionMetrics detection_metrics(const AttackGroundTruth& truth,
                                   const AnnotatorPartition& partition);

/// Fraction of gold-labeled items predicted correctly. Abstentions count as
/// wrong when abstain_incorrect, otherwise they leave the denominator.
/// Items with gold label 0 are unscored.
double label_accuracy(const LabelVector& predicted, const LabelVector& truth,
                      bool abstain_incorrect);

/// One repetition's data exactly as run_experiment sees it: synthetic or
/// file-backed base responses (constant annotators already dropped for
/// files), gold labels, and the injected attack.
struct GeneratedInstance {
  AnnotationMatrix responses;
  LabelVector truth;
  AttackGroundTruth attack;
  Index annotators_loaded = 0;  // before constant-annotator removal
  Index annotators_used = 0;
};

GeneratedInstance generate_instance(const ExperimentConfig& cfg, int repetition);

MetricsReport run_experiment(const ExperimentConfig& cfg);

enum class SweepAxis { PAdv, PCorr };

struct SweepRow {
  double axis_value = 0.0;
  Method method = Method::MajorityVote;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
};

struct SweepReport {
  ExperimentConfig base;
  SweepAxis axis = SweepAxis::PAdv;
  std::vector<double> values;
  std::vector<SweepRow> rows;
  std::vector<std::string> errors;  // per-point failures, the sweep continues
};

/// One run_experiment per axis value with a per-point seed offset.
SweepReport sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values);

double mean_of(const std::vector<double>& values);
double stddev_of(const std::vector<double>& values);

/// One-per-line or `item,label` CSV of gold labels (0 = no gold).
LabelVector load_labels(const std::string& path);
void save_labels(const LabelVector& labels, const std::string& path);

}  // namespace crowdguard
