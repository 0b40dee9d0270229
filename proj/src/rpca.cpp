#include "crowdguard/rpca.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crowdguard {

namespace {

Matrix soft_threshold(const Matrix& x, double tau) {
  return x.array().sign() * (x.array().abs() - tau).max(0.0);
}

/// Rank-restoring singular-value shrinkage: U max(S - tau, 0) V^T.
Matrix singular_value_shrink(const Matrix& x, double tau) {
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector shrunk = (svd.singularValues().array() - tau).max(0.0);
  return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

Matrix binarize(const Matrix& omega) { return (omega.array() > 0.5).cast<double>(); }

}  // namespace

double default_lambda(const Matrix& omega) {
  const Matrix mask = binarize(omega);
  const double observed = mask.sum();
  if (observed <= 0.0) throw std::invalid_argument("default_lambda: all-zero mask");
  const double m = static_cast<double>(omega.rows());
  const double alpha = observed / (m * m);
  return 1.0 / std::sqrt(alpha * m);
}

RpcaDecomposition rpca_decompose(const Matrix& sigma, const Matrix& omega,
                                 const RpcaConfig& cfg) {
  const Index m = sigma.rows();
  if (m == 0 || sigma.cols() != m || omega.rows() != m || omega.cols() != m) {
    throw std::invalid_argument("rpca_decompose: sigma and omega must be square, same size");
  }
  if (cfg.tolerance <= 0.0) throw std::invalid_argument("rpca_decompose: tolerance must be > 0");
  if (cfg.penalty_growth <= 1.0) {
    throw std::invalid_argument("rpca_decompose: penalty_growth must be > 1");
  }
  const Matrix mask = binarize(omega);
  const double lambda = cfg.lambda > 0.0 ? cfg.lambda : default_lambda(mask);
  const Matrix d = mask.cwiseProduct(sigma);

  RpcaDecomposition out;
  out.c_hat = Matrix::Zero(m, m);
  out.s_hat = Matrix::Zero(m, m);
  const double d_inf = d.cwiseAbs().maxCoeff();
  if (d_inf == 0.0) {  // all-zero data splits as zero
    out.converged = true;
    return out;
  }

  const double d_spectral = Eigen::BDCSVD<Matrix>(d).singularValues()(0);
  Matrix y = d / std::max(d_spectral, d_inf / lambda);  // dual, supported on the mask
  double mu = 1.25 / d_spectral;
  // Growth stops at a moderate cap: driving mu to infinity freezes the
  // iterates at the first feasible split, while at a fixed finite mu the
  // updates keep exchanging mass between c_hat and s_hat until the split
  // itself is optimal.
  const double mu_max = mu * 100.0;
  const Matrix unmask = Matrix::Ones(m, m) - mask;
  const double step_tolerance = cfg.tolerance * std::max(1.0, d_inf);

  bool stable = false;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    const Matrix c_prev = out.c_hat;
    const Matrix s_prev = out.s_hat;
    // Observed entries chase the constraint target; unobserved ones carry the
    // previous low-rank iterate so the shrinkage sees a full matrix.
    const Matrix target = mask.cwiseProduct(d - out.s_hat) + unmask.cwiseProduct(out.c_hat);
    out.c_hat = singular_value_shrink(target + y / mu, 1.0 / mu);
    out.s_hat = soft_threshold(mask.cwiseProduct(d - out.c_hat) + y / mu, lambda / mu);

    const Matrix residual = mask.cwiseProduct(d - out.c_hat - out.s_hat);
    const double res_norm = residual.cwiseAbs().maxCoeff();
    out.residual_trace.push_back(res_norm);
    out.iterations = it;
    // Feasibility alone can hold at transient non-optimal points, so also
    // require the prox iterates to have settled.
    const double step_change = std::max((out.c_hat - c_prev).cwiseAbs().maxCoeff(),
                                        (out.s_hat - s_prev).cwiseAbs().maxCoeff());
    if (res_norm <= cfg.tolerance && step_change <= step_tolerance) {
      stable = true;
      break;
    }
    y += mu * residual;
    mu = std::min(mu * cfg.penalty_growth, mu_max);
  }

  out.c_hat = (0.5 * (out.c_hat + out.c_hat.transpose())).eval();
  out.primal_residual =
      mask.cwiseProduct(d - out.c_hat - out.s_hat).cwiseAbs().maxCoeff();
  out.converged = stable && out.primal_residual <= cfg.tolerance;
  return out;
}

RpcaDecomposition rpca_decompose(const AgreementEstimate& est, const RpcaConfig& cfg) {
  return rpca_decompose(est.sigma_hat, est.omega, cfg);
}

std::pair<Vector, Matrix> truncated_eig(const Matrix& sym, Index r) {
  const Index m = sym.rows();
  if (sym.cols() != m) throw std::invalid_argument("truncated_eig: matrix must be square");
  if (r < 1 || r > m) throw std::invalid_argument("truncated_eig: r outside [1, M]");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sym + sym.transpose()));
  if (eig.info() != Eigen::Success) throw std::runtime_error("truncated_eig: solver failed");
  Vector values(r);
  Matrix vectors(m, r);
  for (Index i = 0; i < r; ++i) {  // solver sorts ascending; take the top r
    values(i) = eig.eigenvalues()(m - 1 - i);
    vectors.col(i) = eig.eigenvectors().col(m - 1 - i);
  }
  return {values, vectors};
}

double rpca_objective(const Matrix& c_hat, const Matrix& s_hat, const Matrix& omega,
                      double lambda) {
  const double nuclear = Eigen::BDCSVD<Matrix>(c_hat).singularValues().sum();
  const double l1 = binarize(omega).cwiseProduct(s_hat).cwiseAbs().sum();
  return nuclear + lambda * l1;
}

}  // namespace crowdguard
