#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crowdguard/report.hpp"

#ifndef CROWDGUARD_VERSION
#define CROWDGUARD_VERSION "unknown"
#endif

namespace cg = crowdguard;

namespace {

/// CLI flags shared by every subcommand; set fields override the config file.
struct Overrides {
  std::string config_path;
  std::optional<std::string> dataset;
  std::optional<std::string> format;
  std::optional<std::string> truth;
  std::optional<cg::Index> num_annotators;
  std::optional<cg::Index> num_items;
  std::optional<int> num_classes;
  std::optional<double> p_obs;
  std::optional<std::string> attack_type;
  std::optional<double> p_adv;
  std::optional<double> p_corr;
  std::optional<double> p_obs_adv;
  std::vector<std::string> methods;
  std::vector<cg::Index> trusted;  // 1-based, as on disk
  std::optional<int> repetitions;
  std::vector<double> rho_grid;
  std::optional<int> min_overlap;
  std::optional<std::string> rho_selection;
  std::optional<bool> abstain_incorrect;
  std::optional<std::uint64_t> seed;
};

void add_override_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("-c,--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd.add_option("--dataset", o.dataset, "annotation file (omit for synthetic data)");
  cmd.add_option("--data-format", o.format, "triplet | dense")
      ->check(CLI::IsMember({"triplet", "dense"}));
  cmd.add_option("--truth", o.truth, "gold label file");
  cmd.add_option("-M,--annotators", o.num_annotators, "synthetic annotator count");
  cmd.add_option("-N,--items", o.num_items, "synthetic item count");
  cmd.add_option("-K,--classes", o.num_classes, "number of classes");
  cmd.add_option("--p-obs", o.p_obs, "honest response probability");
  cmd.add_option("--attack-type", o.attack_type, "A | B")->check(CLI::IsMember({"A", "B"}));
  cmd.add_option("--p-adv", o.p_adv, "fraction of adversarial annotators");
  cmd.add_option("--p-corr", o.p_corr, "fraction of corrupted items");
  cmd.add_option("--p-obs-adv", o.p_obs_adv, "adversary response probability");
  cmd.add_option("--method", o.methods, "MV | DS | ALG1_H | ALG1_TA (repeatable)");
  cmd.add_option("--trusted", o.trusted, "trusted annotator indices, 1-based (repeatable)");
  cmd.add_option("-r,--repetitions", o.repetitions, "number of repetitions");
  cmd.add_option("--rho-grid", o.rho_grid, "grid of rho values (repeatable)");
  cmd.add_option("--min-overlap", o.min_overlap, "co-observation floor for agreement entries");
  cmd.add_option("--rho-selection", o.rho_selection, "sum | min cluster-score aggregation")
      ->check(CLI::IsMember({"sum", "min"}));
  cmd.add_option("--abstain-incorrect", o.abstain_incorrect,
                 "score abstentions as incorrect (default true)");
  cmd.add_option("-s,--seed", o.seed, "base seed");
}

cg::ExperimentConfig build_config(const Overrides& o) {
  cg::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = cg::load_config(o.config_path);
  if (o.dataset) cfg.dataset_path = *o.dataset;
  if (o.format) {
    cfg.dataset_format = *o.format == "triplet" ? cg::AnnotationFormat::TripletCsv
                                                : cg::AnnotationFormat::DenseCsv;
  }
  if (o.truth) cfg.truth_path = *o.truth;
  if (o.num_annotators) cfg.synthetic.num_annotators = *o.num_annotators;
  if (o.num_items) cfg.synthetic.num_items = *o.num_items;
  if (o.num_classes) cfg.synthetic.num_classes = *o.num_classes;
  if (o.p_obs) cfg.synthetic.p_obs = *o.p_obs;
  if (o.attack_type) {
    cfg.attack.type = *o.attack_type == "A" ? cg::AttackType::TypeA : cg::AttackType::TypeB;
  }
  if (o.p_adv) cfg.attack.p_adv = *o.p_adv;
  if (o.p_corr) cfg.attack.p_corr = *o.p_corr;
  if (o.p_obs_adv) cfg.attack.p_obs_adv = *o.p_obs_adv;
  if (!o.methods.empty()) {
    cfg.methods.clear();
    for (const std::string& name : o.methods) cfg.methods.push_back(cg::parse_method(name));
  }
  if (!o.trusted.empty()) {
    cfg.trusted.clear();
    for (const cg::Index t : o.trusted) {
      if (t < 1) throw CLI::ValidationError("--trusted indices are 1-based");
      cfg.trusted.push_back(t - 1);
    }
  }
  if (o.repetitions) cfg.repetitions = *o.repetitions;
  if (!o.rho_grid.empty()) cfg.rho_grid = o.rho_grid;
  if (o.min_overlap) cfg.min_overlap = *o.min_overlap;
  if (o.rho_selection) {
    cfg.rho_selection = *o.rho_selection == "sum" ? cg::RhoSelection::SumClusterScore
                                                  : cg::RhoSelection::MinClusterScore;
  }
  if (o.abstain_incorrect) cfg.abstain_incorrect = *o.abstain_incorrect;
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

void print_summary(const cg::MetricsReport& report) {
  for (const cg::MethodStats& stats : report.stats) {
    std::cout << cg::method_name(stats.method);
    if (stats.failures > 0) std::cout << "  [" << stats.failures << " failed]";
    std::cout << "\n";
    for (const auto& [metric, values] : stats.metrics) {
      if (values.empty()) continue;
      std::cout << "  " << metric << ": " << cg::mean_of(values) << " +- "
                << cg::stddev_of(values) << " (" << values.size() << " reps)\n";
    }
    for (const std::string& msg : stats.failure_messages) {
      std::cout << "  ! " << msg << "\n";
    }
  }
}

int cmd_run(const Overrides& o, const std::string& out_prefix) {
  const cg::ExperimentConfig cfg = build_config(o);
  const cg::MetricsReport report = cg::run_experiment(cfg);
  cg::write_text(out_prefix + ".json", cg::report_to_json(report, CROWDGUARD_VERSION));
  cg::write_text(out_prefix + ".csv", cg::report_to_csv(report));
  print_summary(report);
  std::cout << "wrote " << out_prefix << ".json and " << out_prefix << ".csv\n";
  return 0;
}

int cmd_sweep(const Overrides& o, const std::string& axis_name,
              const std::vector<double>& values, const std::string& out_prefix) {
  const cg::ExperimentConfig cfg = build_config(o);
  const cg::SweepAxis axis =
      axis_name == "p_adv" ? cg::SweepAxis::PAdv : cg::SweepAxis::PCorr;
  const cg::SweepReport report = cg::sweep(cfg, axis, values);
  cg::write_text(out_prefix + ".json", cg::sweep_to_json(report, CROWDGUARD_VERSION));
  cg::write_text(out_prefix + ".csv", cg::sweep_to_csv(report));
  for (const std::string& err : report.errors) std::cout << "point failed: " << err << "\n";
  std::cout << "wrote " << report.rows.size() << " rows to " << out_prefix << ".csv\n";
  return 0;
}

int cmd_inspect(const Overrides& o, const std::string& out_dir) {
  const cg::ExperimentConfig cfg = build_config(o);
  std::filesystem::create_directories(out_dir);
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(out_dir) / name).string();
  };

  const cg::GeneratedInstance instance = cg::generate_instance(cfg, 0);
  const cg::AgreementEstimate agreement =
      cg::empirical_agreement(instance.responses, cfg.min_overlap);
  cg::write_agreement_csv(agreement, path("sigma.csv"));
  cg::write_matrix_csv(agreement.omega, path("omega.csv"));

  const cg::RpcaDecomposition dec = cg::rpca_decompose(agreement, cfg.rpca);
  cg::write_matrix_csv(dec.c_hat, path("c_hat.csv"));
  cg::write_matrix_csv(dec.s_hat, path("s_hat.csv"));
  std::cout << "rpca: " << dec.iterations << " iterations, residual " << dec.primal_residual
            << (dec.converged ? "" : " (not converged)") << "\n";

  const cg::SideInfo side = cfg.trusted.empty()
                                ? cg::SideInfo::majority_honest()
                                : cg::SideInfo::trusted_annotators(cfg.trusted);
  const cg::AnnotatorPartition partition =
      cg::cluster_annotators(agreement, dec.c_hat, instance.responses.num_classes(),
                             cfg.rho_grid, side, cfg.rho_selection);
  cg::write_text(path("partition.json"), cg::partition_to_json(partition));
  cg::write_text(path("attack.json"), cg::attack_truth_to_json(instance.attack));
  std::cout << "partition: " << partition.honest.size() << " honest / "
            << partition.adversarial.size() << " adversarial"
            << (partition.degenerate ? " (degenerate)" : "") << ", rho "
            << partition.chosen_rho << "\n";

  const cg::AggregationResult aggregated =
      cg::aggregate_with_partition(instance.responses, partition, cfg.em);
  cg::write_text(path("labels.csv"), cg::aggregation_to_csv(aggregated));
  cg::write_text(path("model.json"), cg::model_to_json(aggregated.model));
  std::cout << "wrote sigma/omega/c_hat/s_hat/labels CSVs and partition/attack/model JSON to "
            << out_dir << "\n";
  return 0;
}

int cmd_gen(const Overrides& o, const std::string& out_prefix) {
  const cg::ExperimentConfig cfg = build_config(o);
  const cg::GeneratedInstance instance = cg::generate_instance(cfg, 0);
  cg::save_annotations(instance.responses, out_prefix + ".csv",
                       cg::AnnotationFormat::TripletCsv);
  cg::save_labels(instance.truth, out_prefix + "_truth.csv");
  cg::write_text(out_prefix + "_attack.json", cg::attack_truth_to_json(instance.attack));
  std::cout << "wrote " << out_prefix << ".csv, " << out_prefix << "_truth.csv, " << out_prefix
            << "_attack.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversary-aware crowdsourced label aggregation"};
  app.set_version_flag("--version", std::string(CROWDGUARD_VERSION));
  app.require_subcommand(1);

  Overrides run_o;
  std::string run_out = "report";
  CLI::App* run = app.add_subcommand("run", "run one experiment, write JSON + CSV reports");
  add_override_options(*run, run_o);
  run->add_option("-o,--out", run_out, "output path prefix");

  Overrides sweep_o;
  std::string sweep_out = "sweep";
  std::string sweep_axis = "p_adv";
  std::vector<double> sweep_values;
  CLI::App* sw = app.add_subcommand("sweep", "run one experiment per axis value");
  add_override_options(*sw, sweep_o);
  sw->add_option("--axis", sweep_axis, "p_adv | p_corr")
      ->check(CLI::IsMember({"p_adv", "p_corr"}));
  sw->add_option("--values", sweep_values, "axis values (repeatable)")->required();
  sw->add_option("-o,--out", sweep_out, "output path prefix");

  Overrides inspect_o;
  std::string inspect_dir = "inspect";
  CLI::App* ins = app.add_subcommand("inspect", "dump agreement/RPCA/partition diagnostics");
  add_override_options(*ins, inspect_o);
  ins->add_option("-o,--out-dir", inspect_dir, "output directory");

  Overrides gen_o;
  std::string gen_out = "dataset";
  CLI::App* gen = app.add_subcommand("gen", "emit a synthetic dataset with ground truth");
  add_override_options(*gen, gen_o);
  gen->add_option("-o,--out", gen_out, "output path prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_o, run_out);
    if (sw->parsed()) return cmd_sweep(sweep_o, sweep_axis, sweep_values, sweep_out);
    if (ins->parsed()) return cmd_inspect(inspect_o, inspect_dir);
    if (gen->parsed()) return cmd_gen(gen_o, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
