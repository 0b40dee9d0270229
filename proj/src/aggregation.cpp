#include "crowdguard/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crowdguard {

namespace {

/// Argmax over a row, smallest index on ties.
int argmax_class(const Matrix& rows, Index n) {
  int best = 0;
  for (Index c = 1; c < rows.cols(); ++c) {
    if (rows(n, c) > rows(n, best)) best = static_cast<int>(c);
  }
  return best + 1;
}

Matrix posterior_from_labels(const LabelVector& init, Index num_items, int k) {
  if (static_cast<Index>(init.size()) != num_items) {
    throw std::invalid_argument("ds_em: init length does not match item count");
  }
  Matrix posterior = Matrix::Constant(num_items, k, 1.0 / k);
  for (Index n = 0; n < num_items; ++n) {
    const int label = init[static_cast<std::size_t>(n)];
    if (label == kAbstain) continue;
    if (label < 1 || label > k) throw std::invalid_argument("ds_em: init label out of range");
    posterior.row(n).setZero();
    posterior(n, label - 1) = 1.0;
  }
  return posterior;
}

DsModel m_step(const AnnotationMatrix& a, const Matrix& posterior, double smoothing) {
  const Index num_items = a.num_items();
  const int k = a.num_classes();
  DsModel model;
  const Vector counts = posterior.colwise().sum();
  model.priors = (counts.array() + smoothing) /
                 (static_cast<double>(num_items) + k * smoothing);
  model.confusions.reserve(static_cast<std::size_t>(a.num_annotators()));
  for (Index m = 0; m < a.num_annotators(); ++m) {
    Matrix weight = Matrix::Zero(k, k);  // (response, class) expected counts
    for (const auto& [item, label] : a.annotator_responses(m)) {
      weight.row(label - 1) += posterior.row(item);
    }
    Matrix h(k, k);
    for (int c = 0; c < k; ++c) {
      h.col(c) = (weight.col(c).array() + smoothing) / (weight.col(c).sum() + k * smoothing);
    }
    model.confusions.push_back(std::move(h));
  }
  return model;
}

/// Posterior update plus the smoothed observed log-likelihood, i.e. the
/// objective that MAP-EM with additive smoothing provably ascends.
double e_step(const AnnotationMatrix& a, const DsModel& model, Matrix& posterior) {
  const Index num_items = a.num_items();
  const int k = a.num_classes();
  const Vector log_priors = model.priors.array().log();
  std::vector<Matrix> log_h;
  log_h.reserve(model.confusions.size());
  for (const Matrix& h : model.confusions) log_h.push_back(h.array().log());

  double ll = 0.0;
  Vector scores(k);
  for (Index n = 0; n < num_items; ++n) {
    scores = log_priors;
    for (const auto& [annotator, label] : a.item_responses(n)) {
      scores += log_h[static_cast<std::size_t>(annotator)].row(label - 1).transpose();
    }
    const double top = scores.maxCoeff();
    const double lse = top + std::log((scores.array() - top).exp().sum());
    posterior.row(n) = (scores.array() - lse).exp();
    ll += lse;
  }
  return ll;
}

double log_prior_penalty(const DsModel& model, double smoothing) {
  double penalty = model.priors.array().log().sum();
  for (const Matrix& h : model.confusions) penalty += h.array().log().sum();
  return smoothing * penalty;
}

}  // namespace

LabelVector majority_vote(const AnnotationMatrix& a) {
  LabelVector labels(static_cast<std::size_t>(a.num_items()), kAbstain);
  std::vector<int> votes(static_cast<std::size_t>(a.num_classes()));
  for (Index n = 0; n < a.num_items(); ++n) {
    const auto& col = a.item_responses(n);
    if (col.empty()) continue;
    std::fill(votes.begin(), votes.end(), 0);
    for (const auto& [annotator, label] : col) votes[static_cast<std::size_t>(label - 1)] += 1;
    int best = 0;
    for (int c = 1; c < a.num_classes(); ++c) {
      if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    }
    labels[static_cast<std::size_t>(n)] = best + 1;
  }
  return labels;
}

int map_label(const std::vector<std::pair<Index, int>>& responses, const DsModel& model) {
  if (responses.empty()) throw std::invalid_argument("map_label: no responses");
  const Index k = model.priors.size();
  Vector scores = model.priors.array().log();
  for (const auto& [annotator, label] : responses) {
    if (annotator < 0 || annotator >= static_cast<Index>(model.confusions.size())) {
      throw std::invalid_argument("map_label: annotator outside the model");
    }
    if (label < 1 || label > k) throw std::invalid_argument("map_label: label out of range");
    scores = scores.array() +
             model.confusions[static_cast<std::size_t>(annotator)].row(label - 1).transpose().array().log();
  }
  int best = 0;
  for (Index c = 1; c < k; ++c) {
    if (scores(c) > scores(best)) best = static_cast<int>(c);
  }
  return best + 1;
}

AggregationResult ds_em(const AnnotationMatrix& a, const Matrix& init_posterior,
                        const EmConfig& cfg) {
  if (a.num_annotators() == 0 || a.num_responses() == 0) {
    throw std::invalid_argument("ds_em: empty input");
  }
  if (cfg.smoothing <= 0.0) throw std::invalid_argument("ds_em: smoothing must be > 0");
  const Index num_items = a.num_items();
  const int k = a.num_classes();
  if (init_posterior.rows() != num_items || init_posterior.cols() != k) {
    throw std::invalid_argument("ds_em: init posterior has wrong shape");
  }

  Matrix posterior = init_posterior;
  for (Index n = 0; n < num_items; ++n) {  // defensive renormalization
    const double total = posterior.row(n).sum();
    if (total <= 0.0 || (posterior.row(n).array() < 0.0).any()) {
      throw std::invalid_argument("ds_em: init posterior rows must be non-negative, non-zero");
    }
    posterior.row(n) /= total;
  }

  AggregationResult result;
  std::vector<double> trace;
  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    result.model = m_step(a, posterior, cfg.smoothing);
    const double ll =
        e_step(a, result.model, posterior) + log_prior_penalty(result.model, cfg.smoothing);
    trace.push_back(ll);
    const double gain = ll - previous;
    previous = ll;
    if (iter > 0 && gain < cfg.tolerance) break;
  }
  result.model.log_likelihood_trace = std::move(trace);

  result.posterior = posterior;
  result.labels.assign(static_cast<std::size_t>(num_items), kAbstain);
  for (Index n = 0; n < num_items; ++n) {
    if (a.item_responses(n).empty()) continue;  // no evidence, no label
    result.labels[static_cast<std::size_t>(n)] = argmax_class(posterior, n);
  }
  return result;
}

AggregationResult ds_em(const AnnotationMatrix& a, const LabelVector& init, const EmConfig& cfg) {
  return ds_em(a, posterior_from_labels(init, a.num_items(), a.num_classes()), cfg);
}

AggregationResult ds_em(const AnnotationMatrix& a, const EmConfig& cfg) {
  return ds_em(a, majority_vote(a), cfg);
}

AggregationResult aggregate_with_partition(const AnnotationMatrix& a,
                                           const AnnotatorPartition& partition,
                                           const EmConfig& cfg) {
  const Index m = a.num_annotators();
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  for (const auto* group : {&partition.honest, &partition.adversarial}) {
    for (const Index idx : *group) {
      if (idx < 0 || idx >= m || seen[static_cast<std::size_t>(idx)]) {
        throw std::invalid_argument("aggregate_with_partition: partition does not match matrix");
      }
      seen[static_cast<std::size_t>(idx)] = 1;
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw std::invalid_argument("aggregate_with_partition: partition does not cover annotators");
  }
  if (partition.honest.empty()) {
    throw std::invalid_argument("aggregate_with_partition: honest set is empty");
  }
  if (partition.adversarial.empty()) return ds_em(a, cfg);

  // Fuse the adversaries' responses into per-item labels.
  LabelVector fused(static_cast<std::size_t>(a.num_items()), kAbstain);
  {
    std::vector<Response> triplets;
    for (std::size_t sub = 0; sub < partition.adversarial.size(); ++sub) {
      for (const auto& [item, label] : a.annotator_responses(partition.adversarial[sub])) {
        triplets.push_back({static_cast<Index>(sub), item, label});
      }
    }
    if (!triplets.empty()) {
      const AnnotationMatrix adversaries(static_cast<Index>(partition.adversarial.size()),
                                         a.num_items(), a.num_classes(), triplets);
      fused = ds_em(adversaries, cfg).labels;
    }
  }

  // Honest rows plus one virtual annotator carrying the fused labels.
  const auto honest_count = static_cast<Index>(partition.honest.size());
  std::vector<Response> triplets;
  for (Index sub = 0; sub < honest_count; ++sub) {
    for (const auto& [item, label] :
         a.annotator_responses(partition.honest[static_cast<std::size_t>(sub)])) {
      triplets.push_back({sub, item, label});
    }
  }
  for (Index n = 0; n < a.num_items(); ++n) {
    const int label = fused[static_cast<std::size_t>(n)];
    if (label != kAbstain) triplets.push_back({honest_count, n, label});
  }
  const AnnotationMatrix augmented(honest_count + 1, a.num_items(), a.num_classes(), triplets);
  AggregationResult result = ds_em(augmented, cfg);

  // Labels carry only where enough distinct annotators weighed in.
  for (Index n = 0; n < a.num_items(); ++n) {
    if (static_cast<int>(augmented.item_responses(n).size()) < a.num_classes()) {
      result.labels[static_cast<std::size_t>(n)] = kAbstain;
    }
  }
  return result;
}

}  // namespace crowdguard
