#pragma once

#include <utility>
#include <vector>

#include "crowdguard/agreement.hpp"
#include "crowdguard/types.hpp"

namespace crowdguard {

struct RpcaConfig {
  double lambda = 0.0;  // <= 0 selects default_lambda(omega)
  int max_iterations = 2000;
  double tolerance = 1e-6;      // max-norm of the masked constraint violation
  double penalty_growth = 1.5;  // multiplier on the penalty parameter per sweep
};

struct RpcaDecomposition {
  Matrix c_hat;  // low-rank part, exactly symmetric for symmetric input
  Matrix s_hat;  // sparse part, zero outside the mask
  int iterations = 0;
  double primal_residual = 0.0;
  bool converged = false;
  std::vector<double> residual_trace;  // masked residual per sweep
};

/// lambda = 1 / sqrt(alpha * M) with alpha the observed fraction of the mask.
double default_lambda(const Matrix& omega);

/// Splits sigma into low-rank c_hat plus sparse s_hat under the masked
/// constraint omega o sigma = omega o (c_hat + s_hat), minimizing
/// ||c_hat||_* + lambda ||vec(s_hat)||_1. Inexact augmented-Lagrangian
/// splitting: singular-value shrinkage for c_hat (unobserved entries carried
/// over from the previous iterate), entrywise shrinkage for s_hat on the
/// mask, dual updates on the mask only.
RpcaDecomposition rpca_decompose(const Matrix& sigma, const Matrix& omega,
                                 const RpcaConfig& cfg = {});

RpcaDecomposition rpca_decompose(const AgreementEstimate& est, const RpcaConfig& cfg = {});

/// Top-r eigenpairs of the symmetrized input by algebraic value, eigenvalues
/// descending.
std::pair<Vector, Matrix> truncated_eig(const Matrix& sym, Index r);

/// Objective of the masked program at (c_hat, s_hat): nuclear norm plus
/// lambda times the l1 norm on the mask.
double rpca_objective(const Matrix& c_hat, const Matrix& s_hat, const Matrix& omega,
                      double lambda);

}  // namespace crowdguard
