#pragma once

#include <map>
#include <utility>
#include <vector>

#include "crowdguard/annotations.hpp"
#include "crowdguard/rng.hpp"
#include "crowdguard/types.hpp"

namespace crowdguard {

enum class AttackType {
  TypeA,  // truthful outside the corrupted items
  TypeB,  // honest-looking confusion-model responses outside the corrupted items
};

struct AttackConfig {
  AttackType type = AttackType::TypeA;
  double p_adv = 0.0;      // fraction of annotators turned adversarial
  double p_corr = 0.0;     // fraction of items attacked
  double p_obs_adv = 0.2;  // adversary response probability per item
};

struct AttackGroundTruth {
  std::vector<Index> adversary_indices;  // ascending
  std::vector<Index> corrupted_items;    // ascending
  std::map<Index, int> wrong_labels;     // shared wrong label per corrupted item
  std::vector<Matrix> type_b_confusions;  // per adversary, ascending order (Type B only)
};

/// Column-stochastic K x K matrix whose diagonal beats chance per class:
/// each diagonal entry is uniform in (1/K + 0.05, 1), the rest of the
/// column's mass is spread by a flat simplex draw.
Matrix random_honest_confusion(int num_classes, Rng& rng);

/// Turns floor(M p_adv) annotators into colluding adversaries: their
/// original rows are replaced. On the floor(N p_corr) corrupted items every
/// adversary answers the item's shared wrong label; on clean items Type A
/// answers the truth and Type B answers through a per-adversary random
/// confusion matrix. Each adversary response exists with probability
/// p_obs_adv. Honest rows pass through untouched. Draw order is fixed
/// (adversaries, corrupted items, wrong labels, Type B confusions, then
/// responses annotator-major), so the rng state determines the output.
std::pair<AnnotationMatrix, AttackGroundTruth> apply_attack(const AnnotationMatrix& a,
                                                            const LabelVector& truth,
                                                            const AttackConfig& cfg, Rng& rng);

}  // namespace crowdguard
