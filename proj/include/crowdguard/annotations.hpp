#pragma once

#include <string>
#include <utility>
#include <vector>

#include "crowdguard/rng.hpp"
#include "crowdguard/types.hpp"

namespace crowdguard {

/// One response: annotator `annotator` gave item `item` the label in {1..K}.
/// Indices are 0-based in memory, 1-based on disk.
struct Response {
  Index annotator = 0;
  Index item = 0;
  int label = 0;
};

/// Sparse M x N categorical response table. Missing responses are never
/// stored; label 0 marks "missing" only at the interchange layer.
/// Immutable after construction.
class AnnotationMatrix {
 public:
  /// Validates index ranges, label range {1..K}, and rejects duplicate
  /// (annotator, item) pairs.
  AnnotationMatrix(Index num_annotators, Index num_items, int num_classes,
                   const std::vector<Response>& responses);

  Index num_annotators() const { return static_cast<Index>(by_annotator_.size()); }
  Index num_items() const { return static_cast<Index>(by_item_.size()); }
  int num_classes() const { return num_classes_; }
  Index num_responses() const { return num_responses_; }

  /// (item, label) pairs of annotator m, ascending by item.
  const std::vector<std::pair<Index, int>>& annotator_responses(Index m) const {
    return by_annotator_.at(static_cast<std::size_t>(m));
  }

  /// (annotator, label) pairs on item n, ascending by annotator.
  const std::vector<std::pair<Index, int>>& item_responses(Index n) const {
    return by_item_.at(static_cast<std::size_t>(n));
  }

  /// Label of (annotator, item), or 0 when missing.
  int response(Index annotator, Index item) const;

  /// All responses, ascending by (annotator, item).
  std::vector<Response> to_triplets() const;

  bool operator==(const AnnotationMatrix& other) const;

 private:
  int num_classes_ = 2;
  Index num_responses_ = 0;
  std::vector<std::vector<std::pair<Index, int>>> by_annotator_;
  std::vector<std::vector<std::pair<Index, int>>> by_item_;
};

enum class AnnotationFormat {
  TripletCsv,  // rows `item,annotator,label`, 1-based, header optional
  DenseCsv,    // one row per annotator, 0 = missing
};

/// num_classes = 0 infers K as the largest observed label. A triplet header
/// may carry a `K=<int>` token; a conflict with num_classes is an error.
AnnotationMatrix load_annotations(const std::string& path, AnnotationFormat format,
                                  int num_classes = 0);

void save_annotations(const AnnotationMatrix& a, const std::string& path,
                      AnnotationFormat format);

struct DropResult {
  AnnotationMatrix matrix;
  std::vector<Index> removed;  // original annotator indices, ascending
};

/// Removes annotators whose observed responses are all one identical label.
/// Single-response and fully silent annotators count as constant: neither
/// carries any agreement signal. Kept annotators stay in order, renumbered
/// contiguously; items are untouched.
DropResult drop_constant_annotators(const AnnotationMatrix& a);

/// Throws unless h is K x K, entrywise >= 0, columns summing to 1 within 1e-9.
void validate_confusion(const Matrix& h);

/// Throws unless pi is non-negative and sums to 1 within 1e-9.
void validate_priors(const Vector& pi);

struct SimulatedCrowd {
  AnnotationMatrix responses;
  std::vector<int> truth;  // length N, values in {1..K}
};

/// Ground-truth labels drawn i.i.d. from priors; annotator m sees each item
/// independently with probability p_obs and, given truth k, responds from
/// column k of confusions[m]. Draw order is fixed (all truths first, then
/// responses scanned annotator-major), so a given rng state fully determines
/// the output.
SimulatedCrowd simulate_honest_responses(const std::vector<Matrix>& confusions,
                                         const Vector& priors, Index num_items,
                                         double p_obs, Rng& rng);

}  // namespace crowdguard
