#include "crowdguard/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crowdguard {

Matrix random_honest_confusion(int num_classes, Rng& rng) {
  if (num_classes < 2) throw std::invalid_argument("random_honest_confusion: K must be >= 2");
  const double k = num_classes;
  Matrix h(num_classes, num_classes);
  for (int c = 0; c < num_classes; ++c) {
    const double diagonal = rng.uniform(1.0 / k + 0.05, 1.0);
    // Flat simplex draw for the off-diagonal mass: normalized exponentials.
    Vector off(num_classes - 1);
    for (int i = 0; i < num_classes - 1; ++i) {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      off(i) = -std::log(u);
    }
    off *= (1.0 - diagonal) / off.sum();
    int next = 0;
    for (int r = 0; r < num_classes; ++r) {
      h(r, c) = r == c ? diagonal : off(next++);
    }
  }
  return h;
}

std::pair<AnnotationMatrix, AttackGroundTruth> apply_attack(const AnnotationMatrix& a,
                                                            const LabelVector& truth,
                                                            const AttackConfig& cfg, Rng& rng) {
  const Index m = a.num_annotators();
  const Index n = a.num_items();
  const int k = a.num_classes();
  if (static_cast<Index>(truth.size()) != n) {
    throw std::invalid_argument("apply_attack: truth length does not match item count");
  }
  for (const int label : truth) {
    if (label < 1 || label > k) throw std::invalid_argument("apply_attack: bad truth label");
  }
  for (const double p : {cfg.p_adv, cfg.p_corr, cfg.p_obs_adv}) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("apply_attack: fractions must be in [0, 1]");
  }

  AttackGroundTruth gt;
  {
    auto picked = rng.sample_without_replacement(
        static_cast<int>(m), static_cast<int>(std::floor(static_cast<double>(m) * cfg.p_adv)));
    gt.adversary_indices.assign(picked.begin(), picked.end());
    std::sort(gt.adversary_indices.begin(), gt.adversary_indices.end());
  }
  if (gt.adversary_indices.empty()) return {a, std::move(gt)};  // nobody to corrupt anything
  {
    auto picked = rng.sample_without_replacement(
        static_cast<int>(n), static_cast<int>(std::floor(static_cast<double>(n) * cfg.p_corr)));
    gt.corrupted_items.assign(picked.begin(), picked.end());
    std::sort(gt.corrupted_items.begin(), gt.corrupted_items.end());
  }
  for (const Index item : gt.corrupted_items) {
    // Uniform over the K-1 labels differing from the truth.
    const int y = truth[static_cast<std::size_t>(item)];
    int wrong = rng.uniform_int(1, k - 1);
    if (wrong >= y) ++wrong;
    gt.wrong_labels[item] = wrong;
  }
  if (cfg.type == AttackType::TypeB) {
    gt.type_b_confusions.reserve(gt.adversary_indices.size());
    for (std::size_t i = 0; i < gt.adversary_indices.size(); ++i) {
      gt.type_b_confusions.push_back(random_honest_confusion(k, rng));
    }
  }

  std::vector<char> is_adversary(static_cast<std::size_t>(m), 0);
  for (const Index adv : gt.adversary_indices) is_adversary[static_cast<std::size_t>(adv)] = 1;
  std::vector<char> is_corrupted(static_cast<std::size_t>(n), 0);
  for (const Index item : gt.corrupted_items) is_corrupted[static_cast<std::size_t>(item)] = 1;

  std::vector<Response> responses;
  for (Index annotator = 0; annotator < m; ++annotator) {
    if (!is_adversary[static_cast<std::size_t>(annotator)]) {
      for (const auto& [item, label] : a.annotator_responses(annotator)) {
        responses.push_back({annotator, item, label});
      }
    }
  }
  for (std::size_t i = 0; i < gt.adversary_indices.size(); ++i) {
    const Index annotator = gt.adversary_indices[i];
    for (Index item = 0; item < n; ++item) {
      if (!rng.bernoulli(cfg.p_obs_adv)) continue;
      int label;
      if (is_corrupted[static_cast<std::size_t>(item)]) {
        label = gt.wrong_labels.at(item);
      } else if (cfg.type == AttackType::TypeA) {
        label = truth[static_cast<std::size_t>(item)];
      } else {
        label = rng.categorical(
                    gt.type_b_confusions[i].col(truth[static_cast<std::size_t>(item)] - 1)) +
                1;
      }
      responses.push_back({annotator, item, label});
    }
  }
  return {AnnotationMatrix(m, n, k, responses), std::move(gt)};
}

}  // namespace crowdguard
