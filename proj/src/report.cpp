#include "crowdguard/report.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace crowdguard {

namespace {

using Json = nlohmann::ordered_json;

std::string format_name(AnnotationFormat format) {
  return format == AnnotationFormat::TripletCsv ? "triplet" : "dense";
}

AnnotationFormat parse_format(const std::string& name) {
  if (name == "triplet") return AnnotationFormat::TripletCsv;
  if (name == "dense") return AnnotationFormat::DenseCsv;
  throw std::invalid_argument("unknown annotation format: " + name);
}

std::string attack_name(AttackType type) { return type == AttackType::TypeA ? "A" : "B"; }

AttackType parse_attack(const std::string& name) {
  if (name == "A") return AttackType::TypeA;
  if (name == "B") return AttackType::TypeB;
  throw std::invalid_argument("unknown attack type: " + name);
}

std::string selection_name(RhoSelection s) {
  return s == RhoSelection::SumClusterScore ? "sum" : "min";
}

RhoSelection parse_selection(const std::string& name) {
  if (name == "sum") return RhoSelection::SumClusterScore;
  if (name == "min") return RhoSelection::MinClusterScore;
  throw std::invalid_argument("unknown rho selection mode: " + name);
}

Json config_json(const ExperimentConfig& cfg) {
  Json j;
  j["dataset"] = cfg.dataset_path;
  j["format"] = format_name(cfg.dataset_format);
  j["truth"] = cfg.truth_path;
  j["M"] = cfg.synthetic.num_annotators;
  j["N"] = cfg.synthetic.num_items;
  j["K"] = cfg.synthetic.num_classes;
  j["p_obs"] = cfg.synthetic.p_obs;
  j["attack_type"] = attack_name(cfg.attack.type);
  j["p_adv"] = cfg.attack.p_adv;
  j["p_corr"] = cfg.attack.p_corr;
  j["p_obs_adv"] = cfg.attack.p_obs_adv;
  Json methods = Json::array();
  for (const Method m : cfg.methods) methods.push_back(method_name(m));
  j["methods"] = methods;
  Json trusted = Json::array();
  for (const Index t : cfg.trusted) trusted.push_back(t + 1);  // 1-based on disk
  j["trusted"] = trusted;
  j["repetitions"] = cfg.repetitions;
  j["rho_grid"] = cfg.rho_grid;
  j["min_overlap"] = cfg.min_overlap;
  j["em_max_iters"] = cfg.em.max_iterations;
  j["em_tol"] = cfg.em.tolerance;
  j["em_smoothing"] = cfg.em.smoothing;
  j["rpca_lambda"] = cfg.rpca.lambda;
  j["rpca_max_iters"] = cfg.rpca.max_iterations;
  j["rpca_tol"] = cfg.rpca.tolerance;
  j["rpca_growth"] = cfg.rpca.penalty_growth;
  j["rho_selection"] = selection_name(cfg.rho_selection);
  j["abstain_incorrect"] = cfg.abstain_incorrect;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  const Json j = Json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::set<std::string> known = {
      "dataset",      "format",        "truth",        "M",
      "N",            "K",             "p_obs",        "attack_type",
      "p_adv",        "p_corr",        "p_obs_adv",    "methods",
      "trusted",      "repetitions",   "rho_grid",     "min_overlap",
      "em_max_iters", "em_tol",        "em_smoothing", "rpca_lambda",
      "rpca_max_iters", "rpca_tol",    "rpca_growth",  "rho_selection",
      "abstain_incorrect", "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key: " + key);
  }

  ExperimentConfig cfg;
  if (j.contains("dataset")) cfg.dataset_path = j["dataset"].get<std::string>();
  if (j.contains("format")) cfg.dataset_format = parse_format(j["format"].get<std::string>());
  if (j.contains("truth")) cfg.truth_path = j["truth"].get<std::string>();
  if (j.contains("M")) cfg.synthetic.num_annotators = j["M"].get<Index>();
  if (j.contains("N")) cfg.synthetic.num_items = j["N"].get<Index>();
  if (j.contains("K")) cfg.synthetic.num_classes = j["K"].get<int>();
  if (j.contains("p_obs")) cfg.synthetic.p_obs = j["p_obs"].get<double>();
  if (j.contains("attack_type")) cfg.attack.type = parse_attack(j["attack_type"].get<std::string>());
  if (j.contains("p_adv")) cfg.attack.p_adv = j["p_adv"].get<double>();
  if (j.contains("p_corr")) cfg.attack.p_corr = j["p_corr"].get<double>();
  if (j.contains("p_obs_adv")) cfg.attack.p_obs_adv = j["p_obs_adv"].get<double>();
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& name : j["methods"]) cfg.methods.push_back(parse_method(name));
  }
  if (j.contains("trusted")) {
    cfg.trusted.clear();
    for (const auto& t : j["trusted"]) {
      const auto one_based = t.get<Index>();
      if (one_based < 1) throw std::invalid_argument("trusted indices are 1-based");
      cfg.trusted.push_back(one_based - 1);
    }
  }
  if (j.contains("repetitions")) cfg.repetitions = j["repetitions"].get<int>();
  if (j.contains("rho_grid")) cfg.rho_grid = j["rho_grid"].get<std::vector<double>>();
  if (j.contains("min_overlap")) cfg.min_overlap = j["min_overlap"].get<int>();
  if (j.contains("em_max_iters")) cfg.em.max_iterations = j["em_max_iters"].get<int>();
  if (j.contains("em_tol")) cfg.em.tolerance = j["em_tol"].get<double>();
  if (j.contains("em_smoothing")) cfg.em.smoothing = j["em_smoothing"].get<double>();
  if (j.contains("rpca_lambda")) cfg.rpca.lambda = j["rpca_lambda"].get<double>();
  if (j.contains("rpca_max_iters")) cfg.rpca.max_iterations = j["rpca_max_iters"].get<int>();
  if (j.contains("rpca_tol")) cfg.rpca.tolerance = j["rpca_tol"].get<double>();
  if (j.contains("rpca_growth")) cfg.rpca.penalty_growth = j["rpca_growth"].get<double>();
  if (j.contains("rho_selection")) {
    cfg.rho_selection = parse_selection(j["rho_selection"].get<std::string>());
  }
  if (j.contains("abstain_incorrect")) cfg.abstain_incorrect = j["abstain_incorrect"].get<bool>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

std::string config_to_json(const ExperimentConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

std::string report_to_json(const MetricsReport& report, const std::string& version) {
  Json j;
  j["version"] = version;
  j["seed"] = report.config.seed;
  j["config"] = config_json(report.config);
  j["annotators_loaded"] = report.annotators_loaded;
  j["annotators_used"] = report.annotators_used;
  Json methods = Json::array();
  for (const MethodStats& stats : report.stats) {
    Json m;
    m["method"] = method_name(stats.method);
    Json metrics;
    for (const auto& [name, values] : stats.metrics) {
      Json entry;
      entry["mean"] = values.empty() ? Json() : Json(mean_of(values));
      entry["std"] = values.empty() ? Json() : Json(stddev_of(values));
      entry["values"] = values;
      metrics[name] = entry;
    }
    m["metrics"] = metrics;
    m["failures"] = stats.failures;
    m["failure_messages"] = stats.failure_messages;
    methods.push_back(m);
  }
  j["methods"] = methods;
  return j.dump(2) + "\n";
}

std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "method,metric,mean,std,reps,failures\n";
  for (const MethodStats& stats : report.stats) {
    for (const auto& [name, values] : stats.metrics) {
      if (values.empty()) continue;
      out << method_name(stats.method) << "," << name << "," << mean_of(values) << ","
          << stddev_of(values) << "," << values.size() << "," << stats.failures << "\n";
    }
  }
  return out.str();
}

std::string sweep_to_json(const SweepReport& report, const std::string& version) {
  Json j;
  j["version"] = version;
  j["axis"] = report.axis == SweepAxis::PAdv ? "p_adv" : "p_corr";
  j["values"] = report.values;
  j["config"] = config_json(report.base);
  Json rows = Json::array();
  for (const SweepRow& row : report.rows) {
    Json r;
    r["value"] = row.axis_value;
    r["method"] = method_name(row.method);
    r["metric"] = row.metric;
    r["mean"] = row.mean;
    r["std"] = row.stddev;
    rows.push_back(r);
  }
  j["rows"] = rows;
  j["errors"] = report.errors;
  return j.dump(2) + "\n";
}

std::string sweep_to_csv(const SweepReport& report) {
  std::ostringstream out;
  out.precision(17);
  const std::string axis = report.axis == SweepAxis::PAdv ? "p_adv" : "p_corr";
  out << "axis,value,method,metric,mean,std\n";
  for (const SweepRow& row : report.rows) {
    out << axis << "," << row.axis_value << "," << method_name(row.method) << "," << row.metric
        << "," << row.mean << "," << row.stddev << "\n";
  }
  return out.str();
}

std::string attack_truth_to_json(const AttackGroundTruth& truth) {
  Json j;
  Json adversaries = Json::array();
  for (const Index idx : truth.adversary_indices) adversaries.push_back(idx + 1);
  j["adversaries"] = adversaries;
  Json items = Json::array();
  for (const Index idx : truth.corrupted_items) items.push_back(idx + 1);
  j["corrupted_items"] = items;
  Json wrong = Json::array();  // [item, label] pairs, 1-based
  for (const auto& [item, label] : truth.wrong_labels) {
    wrong.push_back(Json::array({item + 1, label}));
  }
  j["wrong_labels"] = wrong;
  Json confusions = Json::array();
  for (const Matrix& h : truth.type_b_confusions) {
    Json rows = Json::array();
    for (Index r = 0; r < h.rows(); ++r) {
      Json row = Json::array();
      for (Index c = 0; c < h.cols(); ++c) row.push_back(h(r, c));
      rows.push_back(row);
    }
    confusions.push_back(rows);
  }
  j["type_b_confusions"] = confusions;
  return j.dump(2) + "\n";
}

std::string partition_to_json(const AnnotatorPartition& partition) {
  Json j;
  const auto one_based = [](const std::vector<Index>& xs) {
    Json arr = Json::array();
    for (const Index x : xs) arr.push_back(x + 1);
    return arr;
  };
  j["cluster_1"] = one_based(partition.cluster_1);
  j["cluster_2"] = one_based(partition.cluster_2);
  j["honest"] = one_based(partition.honest);
  j["adversarial"] = one_based(partition.adversarial);
  j["epsilon_1"] = partition.epsilon_1;
  j["epsilon_2"] = partition.epsilon_2;
  j["chosen_rho"] = partition.chosen_rho;
  j["degenerate"] = partition.degenerate;
  Json diags = Json::array();
  for (const RhoDiagnostics& d : partition.diagnostics) {
    Json row;
    row["rho"] = d.rho;
    row["size_1"] = d.size_1;
    row["size_2"] = d.size_2;
    row["epsilon_1"] = d.epsilon_1;
    row["epsilon_2"] = d.epsilon_2;
    row["score"] = d.score;
    row["degenerate"] = d.degenerate;
    diags.push_back(row);
  }
  j["grid"] = diags;
  return j.dump(2) + "\n";
}

std::string aggregation_to_csv(const AggregationResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "item,label,max_posterior\n";
  for (std::size_t n = 0; n < result.labels.size(); ++n) {
    out << n + 1 << "," << result.labels[n] << ","
        << result.posterior.row(static_cast<Index>(n)).maxCoeff() << "\n";
  }
  return out.str();
}

std::string model_to_json(const DsModel& model) {
  Json j;
  j["priors"] = std::vector<double>(model.priors.data(), model.priors.data() + model.priors.size());
  Json confusions = Json::array();
  for (const Matrix& h : model.confusions) {
    Json rows = Json::array();
    for (Index r = 0; r < h.rows(); ++r) {
      Json row = Json::array();
      for (Index c = 0; c < h.cols(); ++c) row.push_back(h(r, c));
      rows.push_back(row);
    }
    confusions.push_back(rows);
  }
  j["confusions"] = confusions;
  j["log_likelihood_trace"] = model.log_likelihood_trace;
  return j.dump(2) + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

void write_matrix_csv(const Matrix& m, const std::string& path) {
  std::ostringstream out;
  out.precision(17);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      out << m(r, c) << (c + 1 < m.cols() ? "," : "");
    }
    out << "\n";
  }
  write_text(path, out.str());
}

}  // namespace crowdguard
