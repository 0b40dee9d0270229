#pragma once

#include <utility>
#include <vector>

#include "crowdguard/annotations.hpp"
#include "crowdguard/subspace.hpp"
#include "crowdguard/types.hpp"

namespace crowdguard {

/// Dawid-Skene model state: one column-stochastic confusion matrix per
/// annotator plus class priors. The trace holds the smoothed (penalized)
/// observed log-likelihood per EM iteration, which the algorithm ascends.
struct DsModel {
  std::vector<Matrix> confusions;
  Vector priors;
  std::vector<double> log_likelihood_trace;
};

struct EmConfig {
  int max_iterations = 200;
  double tolerance = 1e-6;  // absolute gain threshold on the trace
  double smoothing = 0.01;  // additive count smoothing in the M-step
};

struct AggregationResult {
  LabelVector labels;  // kAbstain where no label is emitted
  Matrix posterior;    // N x K, rows sum to 1
  DsModel model;
};

/// Modal label per item; ties go to the smallest label, empty items abstain.
LabelVector majority_vote(const AnnotationMatrix& a);

/// MAP class under the model for one item's responses, given as
/// (annotator, label) pairs. Ties go to the smallest class.
int map_label(const std::vector<std::pair<Index, int>>& responses, const DsModel& model);

/// Dawid-Skene EM from an explicit posterior init (N x K, rows on the
/// simplex). Labels are per-item posterior argmax; items nobody answered
/// abstain and keep the prior as posterior.
AggregationResult ds_em(const AnnotationMatrix& a, const Matrix& init_posterior,
                        const EmConfig& cfg = {});

/// Same, from hard init labels (kAbstain rows start uniform).
AggregationResult ds_em(const AnnotationMatrix& a, const LabelVector& init,
                        const EmConfig& cfg = {});

/// Same, initialized from majority voting.
AggregationResult ds_em(const AnnotationMatrix& a, const EmConfig& cfg = {});

/// Two-stage aggregation: fuse the adversarial annotators' responses with a
/// separate EM run, re-insert them as one virtual annotator next to the
/// honest rows, and run EM again. Labels are emitted only for items with at
/// least K distinct annotators in the augmented matrix. An empty adversary
/// set reduces to plain ds_em; an empty honest set is an error.
AggregationResult aggregate_with_partition(const AnnotationMatrix& a,
                                           const AnnotatorPartition& partition,
                                           const EmConfig& cfg = {});

}  // namespace crowdguard
