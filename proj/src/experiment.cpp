#include "crowdguard/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace crowdguard {

namespace {

void add_metric(MethodStats& stats, const std::string& name, double value) {
  for (auto& [existing, values] : stats.metrics) {
    if (existing == name) {
      values.push_back(value);
      return;
    }
  }
  stats.metrics.push_back({name, {value}});
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::MajorityVote:
      return "MV";
    case Method::DsEm:
      return "DS";
    case Method::Alg1Majority:
      return "ALG1_H";
    case Method::Alg1Trusted:
      return "ALG1_TA";
  }
  throw std::logic_error("method_name: unknown method");
}

Method parse_method(const std::string& name) {
  if (name == "MV") return Method::MajorityVote;
  if (name == "DS") return Method::DsEm;
  if (name == "ALG1_H") return Method::Alg1Majority;
  if (name == "ALG1_TA") return Method::Alg1Trusted;
  throw std::invalid_argument("unknown method: " + name);
}

const std::vector<double>& MethodStats::metric(const std::string& name) const {
  for (const auto& [existing, values] : metrics) {
    if (existing == name) return values;
  }
  throw std::out_of_range("no metric named " + name + " for " + method_name(method));
}

DetectionMetrics detection_metrics(const AttackGroundTruth& truth,
                                   const AnnotatorPartition& partition) {
  const auto m =
      static_cast<Index>(partition.honest.size() + partition.adversarial.size());
  std::vector<char> true_adv(static_cast<std::size_t>(m), 0);
  for (const Index idx : truth.adversary_indices) {
    if (idx < 0 || idx >= m) throw std::invalid_argument("detection_metrics: index mismatch");
    true_adv[static_cast<std::size_t>(idx)] = 1;
  }
  Index hit_adv = 0;
  Index hit_honest = 0;
  for (const Index idx : partition.adversarial) {
    if (true_adv[static_cast<std::size_t>(idx)]) ++hit_adv;
  }
  for (const Index idx : partition.honest) {
    if (!true_adv[static_cast<std::size_t>(idx)]) ++hit_honest;
  }
  const auto adv_total = static_cast<Index>(truth.adversary_indices.size());
  const Index honest_total = m - adv_total;

  DetectionMetrics out;
  out.sensitivity =
      adv_total == 0 ? 1.0 : static_cast<double>(hit_adv) / static_cast<double>(adv_total);
  out.specificity = honest_total == 0
                        ? 1.0
                        : static_cast<double>(hit_honest) / static_cast<double>(honest_total);
  out.clustering_accuracy =
      static_cast<double>(hit_adv + hit_honest) / static_cast<double>(m);
  return out;
}

double label_accuracy(const LabelVector& predicted, const LabelVector& truth,
                      bool abstain_incorrect) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("label_accuracy: length mismatch");
  }
  Index scored = 0;
  Index correct = 0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (truth[n] == kAbstain) continue;  // no gold label
    if (predicted[n] == kAbstain && !abstain_incorrect) continue;
    ++scored;
    if (predicted[n] == truth[n]) ++correct;
  }
  if (scored == 0) throw std::invalid_argument("label_accuracy: nothing to score");
  return static_cast<double>(correct) / static_cast<double>(scored);
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean_of: empty");
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double stddev_of(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("stddev_of: empty");
  if (values.size() == 1) return 0.0;
  const double mu = mean_of(values);
  double ss = 0.0;
  for (const double v : values) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

GeneratedInstance generate_instance(const ExperimentConfig& cfg, int repetition) {
  if (repetition < 0) throw std::invalid_argument("generate_instance: negative repetition");
  const Rng rep_rng = Rng(cfg.seed).fork(static_cast<std::uint64_t>(repetition));
  Rng data_rng = rep_rng.fork(0);
  Rng attack_rng = rep_rng.fork(1);

  auto [base, truth, loaded, used] = [&]() -> std::tuple<AnnotationMatrix, LabelVector, Index, Index> {
    if (!cfg.dataset_path.empty()) {
      const AnnotationMatrix raw = load_annotations(cfg.dataset_path, cfg.dataset_format);
      DropResult dropped = drop_constant_annotators(raw);
      if (cfg.truth_path.empty()) {
        throw std::invalid_argument("generate_instance: file datasets need gold labels");
      }
      LabelVector gold = load_labels(cfg.truth_path);
      gold.resize(static_cast<std::size_t>(dropped.matrix.num_items()), kAbstain);
      const Index used_count = dropped.matrix.num_annotators();
      return {std::move(dropped.matrix), std::move(gold), raw.num_annotators(), used_count};
    }
    const SyntheticSpec& spec = cfg.synthetic;
    std::vector<Matrix> confusions;
    confusions.reserve(static_cast<std::size_t>(spec.num_annotators));
    for (Index i = 0; i < spec.num_annotators; ++i) {
      confusions.push_back(random_honest_confusion(spec.num_classes, data_rng));
    }
    const Vector priors = Vector::Constant(spec.num_classes, 1.0 / spec.num_classes);
    SimulatedCrowd crowd =
        simulate_honest_responses(confusions, priors, spec.num_items, spec.p_obs, data_rng);
    return {std::move(crowd.responses), std::move(crowd.truth), spec.num_annotators,
            spec.num_annotators};
  }();

  auto [attacked, attack_truth] = apply_attack(base, truth, cfg.attack, attack_rng);
  return {std::move(attacked), std::move(truth), std::move(attack_truth), loaded, used};
}

MetricsReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.repetitions < 1) throw std::invalid_argument("run_experiment: repetitions must be >= 1");
  if (cfg.methods.empty()) throw std::invalid_argument("run_experiment: no methods selected");

  MetricsReport report;
  report.config = cfg;
  report.stats.reserve(cfg.methods.size());
  for (const Method method : cfg.methods) {
    MethodStats stats;
    stats.method = method;
    report.stats.push_back(std::move(stats));
  }

  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    GeneratedInstance instance = generate_instance(cfg, rep);
    report.annotators_loaded = instance.annotators_loaded;
    report.annotators_used = instance.annotators_used;
    const AnnotationMatrix& attacked = instance.responses;
    const LabelVector& truth = instance.truth;
    const AttackGroundTruth& attack_truth = instance.attack;
    Rng side_rng = Rng(cfg.seed).fork(static_cast<std::uint64_t>(rep)).fork(2);

    // The agreement and RPCA stages are shared by both ALG1 variants.
    std::optional<AgreementEstimate> agreement;
    std::optional<RpcaDecomposition> decomposition;
    const auto pipeline = [&]() -> const RpcaDecomposition& {
      if (!decomposition) {
        agreement = empirical_agreement(attacked, cfg.min_overlap);
        decomposition = rpca_decompose(*agreement, cfg.rpca);
      }
      return *decomposition;
    };

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      MethodStats& stats = report.stats[mi];
      const Method method = cfg.methods[mi];
      try {
        if (method == Method::MajorityVote) {
          add_metric(stats, "accuracy",
                     label_accuracy(majority_vote(attacked), truth, cfg.abstain_incorrect));
        } else if (method == Method::DsEm) {
          add_metric(stats, "accuracy",
                     label_accuracy(ds_em(attacked, cfg.em).labels, truth,
                                    cfg.abstain_incorrect));
        } else {
          const RpcaDecomposition& dec = pipeline();
          SideInfo side = SideInfo::majority_honest();
          if (method == Method::Alg1Trusted) {
            if (!cfg.trusted.empty()) {
              side = SideInfo::trusted_annotators(cfg.trusted);
            } else {
              // One honest annotator drawn at random anchors the labeling.
              std::vector<Index> honest;
              std::vector<char> adv(static_cast<std::size_t>(attacked.num_annotators()), 0);
              for (const Index idx : attack_truth.adversary_indices) {
                adv[static_cast<std::size_t>(idx)] = 1;
              }
              for (Index idx = 0; idx < attacked.num_annotators(); ++idx) {
                if (!adv[static_cast<std::size_t>(idx)]) honest.push_back(idx);
              }
              if (honest.empty()) {
                throw std::runtime_error("no honest annotator available to trust");
              }
              const int pick =
                  side_rng.uniform_int(0, static_cast<int>(honest.size()) - 1);
              side = SideInfo::trusted_annotators({honest[static_cast<std::size_t>(pick)]});
            }
          }
          const AnnotatorPartition partition =
              cluster_annotators(*agreement, dec.c_hat, attacked.num_classes(), cfg.rho_grid,
                                 side, cfg.rho_selection);
          const AggregationResult result = aggregate_with_partition(attacked, partition, cfg.em);
          const DetectionMetrics det = detection_metrics(attack_truth, partition);
          add_metric(stats, "accuracy",
                     label_accuracy(result.labels, truth, cfg.abstain_incorrect));
          add_metric(stats, "sensitivity", det.sensitivity);
          add_metric(stats, "specificity", det.specificity);
          add_metric(stats, "clustering_accuracy", det.clustering_accuracy);
          add_metric(stats, "degenerate", partition.degenerate ? 1.0 : 0.0);
        }
      } catch (const std::exception& e) {
        stats.failures += 1;
        stats.failure_messages.push_back("rep " + std::to_string(rep) + ": " + e.what());
      }
    }
  }
  return report;
}

SweepReport sweep(const ExperimentConfig& cfg, SweepAxis axis,
                  const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sweep: no axis values");
  for (const double v : values) {
    if (v < 0.0 || v > 1.0) throw std::invalid_argument("sweep: axis values must be in [0, 1]");
  }
  SweepReport out;
  out.base = cfg;
  out.axis = axis;
  out.values = values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig point = cfg;
    (axis == SweepAxis::PAdv ? point.attack.p_adv : point.attack.p_corr) = values[i];
    point.seed = cfg.seed + i;  // fixed per-point offset
    try {
      const MetricsReport report = run_experiment(point);
      for (const MethodStats& stats : report.stats) {
        for (const auto& [metric, reps] : stats.metrics) {
          if (reps.empty()) continue;
          out.rows.push_back({values[i], stats.method, metric, mean_of(reps), stddev_of(reps)});
        }
      }
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << (axis == SweepAxis::PAdv ? "p_adv" : "p_corr") << "=" << values[i] << ": "
          << e.what();
      out.errors.push_back(msg.str());
    }
  }
  return out;
}

LabelVector load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  LabelVector sequential;
  std::vector<std::pair<Index, int>> indexed;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = line;
    while (!stripped.empty() && (stripped.back() == '\r' || stripped.back() == ' ')) {
      stripped.pop_back();
    }
    if (stripped.empty()) continue;
    std::istringstream ss(stripped);
    std::string a;
    std::string b;
    const bool two = static_cast<bool>(std::getline(ss, a, ',')) &&
                     static_cast<bool>(std::getline(ss, b, ','));
    long long va = 0;
    long long vb = 0;
    const auto to_int = [](const std::string& s, long long& v) {
      const char* first = s.data();
      const char* last = s.data() + s.size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      return ec == std::errc{} && ptr == last;
    };
    if (two) {
      if (!to_int(a, va) || !to_int(b, vb)) {
        if (first_content) {  // header
          first_content = false;
          continue;
        }
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad label row");
      }
      if (va < 1 || vb < 0) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad label row");
      }
      indexed.emplace_back(static_cast<Index>(va - 1), static_cast<int>(vb));
    } else {
      if (!to_int(stripped, va) || va < 0) {
        if (first_content) {
          first_content = false;
          continue;
        }
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad label row");
      }
      sequential.push_back(static_cast<int>(va));
    }
    first_content = false;
  }
  if (!indexed.empty()) {
    if (!sequential.empty()) throw std::runtime_error(path + ": mixed label formats");
    Index max_item = 0;
    for (const auto& [item, label] : indexed) max_item = std::max(max_item, item + 1);
    LabelVector out(static_cast<std::size_t>(max_item), kAbstain);
    for (const auto& [item, label] : indexed) out[static_cast<std::size_t>(item)] = label;
    return out;
  }
  return sequential;
}

void save_labels(const LabelVector& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "item,label\n";
  for (std::size_t n = 0; n < labels.size(); ++n) {
    out << (n + 1) << "," << labels[n] << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace crowdguard
