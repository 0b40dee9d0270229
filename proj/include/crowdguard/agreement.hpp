#pragma once

#include <string>

#include "crowdguard/annotations.hpp"
#include "crowdguard/types.hpp"

namespace crowdguard {

/// Pairwise agreement rates between annotators with their observation mask.
/// sigma_hat and omega are symmetric; entries with omega = 0 hold 0 and
/// carry no meaning.
struct AgreementEstimate {
  Matrix sigma_hat;   // M x M, values in [0, 1] where omega = 1
  Matrix omega;       // M x M, 0/1 mask
  IntMatrix co_counts;  // M x M co-observation counts
};

/// Fraction of co-answered items with equal labels, per annotator pair.
/// Off-diagonal pairs need co_counts >= min_overlap to be marked observed.
/// Diagonal: sigma 1 and omega 1 whenever the annotator answered anything.
AgreementEstimate empirical_agreement(const AnnotationMatrix& a, int min_overlap = 5);

/// Population agreement rate tr(H_a diag(pi) H_b^T) of two annotators.
double oracle_agreement(const Matrix& h_a, const Matrix& h_b, const Vector& pi);

/// Length-K^2 embedding v = vec(diag(pi)^{1/2} H^T), column-major, chosen so
/// that <v_a, v_b> equals oracle_agreement(H_a, H_b, pi).
Vector oracle_vector(const Matrix& h, const Vector& pi);

/// Observed entries as 1-based rows `m,m2,sigma,count` with m <= m2.
void write_agreement_csv(const AgreementEstimate& est, const std::string& path);

}  // namespace crowdguard
