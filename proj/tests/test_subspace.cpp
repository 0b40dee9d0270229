#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "crowdguard/adversary.hpp"
#include "crowdguard/annotations.hpp"
#include "crowdguard/rng.hpp"
#include "crowdguard/rpca.hpp"
#include "crowdguard/subspace.hpp"

using namespace crowdguard;

namespace {

double soft_abs(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

/// Independent ADMM solver for the same per-column elastic-net problems,
/// used as an optimization oracle. Column j is excluded by dropping it from
/// the design matrix, and the splitting handles the l1 term exactly.
Matrix admm_self_representation(const Matrix& c, double rho, double rho2) {
  const Index m = c.rows();
  const double l1 = rho * rho2;
  const double l2 = rho * (1.0 - rho2);
  const double beta = 1.0;
  Matrix z_full = Matrix::Zero(m, m);
  for (Index j = 0; j < m; ++j) {
    Matrix a(m, m - 1);
    Index col = 0;
    for (Index i = 0; i < m; ++i) {
      if (i != j) a.col(col++) = c.col(i);
    }
    const Matrix lhs =
        2.0 * a.transpose() * a + (l2 + beta) * Matrix::Identity(m - 1, m - 1);
    const Eigen::LDLT<Matrix> solver(lhs);
    const Vector atc = 2.0 * a.transpose() * c.col(j);
    Vector w = Vector::Zero(m - 1);
    Vector u = Vector::Zero(m - 1);
    for (int iter = 0; iter < 100000; ++iter) {
      const Vector z = solver.solve(atc + beta * (w - u));
      Vector w_next(m - 1);
      for (Index i = 0; i < m - 1; ++i) w_next(i) = soft_abs(z(i) + u(i), l1 / beta);
      const double primal = (z - w_next).cwiseAbs().maxCoeff();
      const double dual = (w_next - w).cwiseAbs().maxCoeff();
      w = w_next;
      u += z - w;
      if (primal < 1e-13 && dual < 1e-13) break;
    }
    col = 0;
    for (Index i = 0; i < m; ++i) z_full(i, j) = i == j ? 0.0 : w(col++);
  }
  return z_full;
}

double elastic_objective(const Matrix& c, const Matrix& z, double rho, double rho2) {
  return (c - c * z).squaredNorm() +
         rho * (rho2 * z.cwiseAbs().sum() + 0.5 * (1.0 - rho2) * z.squaredNorm());
}

/// Two clean rank-one blocks on orthogonal coordinates, sizes a and b.
Matrix two_block_matrix(Index a, Index b, Rng& rng) {
  const Index m = a + b;
  Matrix c = Matrix::Zero(m, m);
  Vector u(a);
  Vector w(b);
  for (Index i = 0; i < a; ++i) u(i) = 1.0 + rng.uniform();
  for (Index i = 0; i < b; ++i) w(i) = 1.0 + rng.uniform();
  c.topLeftCorner(a, a) = u * u.transpose();
  c.bottomRightCorner(b, b) = w * w.transpose();
  return c;
}

AgreementEstimate full_estimate(const Matrix& sigma) {
  AgreementEstimate est;
  est.sigma_hat = sigma;
  est.omega = Matrix::Ones(sigma.rows(), sigma.cols());
  est.co_counts = IntMatrix::Zero(sigma.rows(), sigma.cols());
  return est;
}

bool same_partition(const std::vector<Index>& a, const std::vector<Index>& b) {
  return a == b;
}

}  // namespace

TEST_CASE("huge rho drives Z to zero") {
  Rng rng(1);
  Matrix c(5, 5);
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 5; ++j) c(i, j) = rng.normal();
  }
  const SelfRepresentation sr = self_representation(c, 1e9);
  CHECK(sr.z.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sr.residual <= 1e-6);
}

TEST_CASE("duplicate columns point at each other") {
  // Mutually orthogonal columns leave the duplicate as the only atom with any
  // component along the target, so its elastic-net coefficient has the closed
  // form (2 s^2 - l1) / (2 s^2 + l2) with s the shared column norm.
  Matrix c = Matrix::Zero(5, 5);
  c(0, 0) = 1.5;
  c(1, 1) = 2.0;
  c(2, 2) = 1.0;
  c(4, 4) = 2.5;
  c.col(3) = c.col(1);
  const double rho = 0.1;
  const SelfRepresentation sr = self_representation(c, rho);
  const double l1 = rho * sr.rho2;
  const double l2 = rho * (1.0 - sr.rho2);
  const double expected = (8.0 - l1) / (8.0 + l2);
  CHECK(sr.z(1, 3) == doctest::Approx(expected).epsilon(1e-8));
  CHECK(sr.z(3, 1) == doctest::Approx(expected).epsilon(1e-8));
  Index argmax_col1 = 0;
  sr.z.col(1).cwiseAbs().maxCoeff(&argmax_col1);
  Index argmax_col3 = 0;
  sr.z.col(3).cwiseAbs().maxCoeff(&argmax_col3);
  CHECK(argmax_col1 == 3);
  CHECK(argmax_col3 == 1);
  // Columns orthogonal to every other atom stay unrepresented.
  CHECK(sr.z.col(0).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(sr.z.col(2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("pure ridge matches the closed form") {
  Rng rng(3);
  const Index m = 6;
  Matrix c(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) c(i, j) = rng.normal();
  }
  const double rho = 0.7;
  const SelfRepresentation sr = self_representation(c, rho, 0.0);
  for (Index j = 0; j < m; ++j) {
    // Drop column j, solve (2 A^T A + rho I) z = 2 A^T c_j directly.
    Matrix a(m, m - 1);
    Index col = 0;
    for (Index i = 0; i < m; ++i) {
      if (i != j) a.col(col++) = c.col(i);
    }
    const Matrix lhs = 2.0 * a.transpose() * a + rho * Matrix::Identity(m - 1, m - 1);
    const Vector rhs = 2.0 * a.transpose() * c.col(j);
    const Vector closed = lhs.ldlt().solve(rhs);
    col = 0;
    for (Index i = 0; i < m; ++i) {
      if (i == j) {
        CHECK(sr.z(i, j) == 0.0);
      } else {
        CHECK(sr.z(i, j) == doctest::Approx(closed(col++)).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("coordinate descent agrees with an ADMM oracle") {
  Rng rng(4);
  for (const double rho : {0.05, 0.5, 5.0}) {
    Matrix c(6, 6);
    for (Index i = 0; i < 6; ++i) {
      for (Index j = 0; j < 6; ++j) c(i, j) = rng.normal();
    }
    const SelfRepresentation sr = self_representation(c, rho, 0.95);
    const Matrix oracle = admm_self_representation(c, rho, 0.95);
    CHECK((sr.z - oracle).cwiseAbs().maxCoeff() <= 1e-6);
    // The reported residual certifies the KKT system.
    CHECK(sr.residual <= 1e-6);
    // Same objective up to solver slack.
    CHECK(elastic_objective(c, sr.z, rho, 0.95) <=
          elastic_objective(c, oracle, rho, 0.95) + 1e-9);
  }
}

TEST_CASE("self representation validates arguments") {
  CHECK_THROWS(self_representation(Matrix::Zero(2, 3), 1.0));
  CHECK_THROWS(self_representation(Matrix::Zero(3, 3), 0.0));
  CHECK_THROWS(self_representation(Matrix::Zero(3, 3), 1.0, 1.5));
  const SelfRepresentation tiny = self_representation(Matrix::Ones(1, 1), 1.0);
  CHECK(tiny.z(0, 0) == 0.0);
}

TEST_CASE("zero Z is a degenerate single cluster") {
  SelfRepresentation sr;
  sr.z = Matrix::Zero(4, 4);
  const Bipartition p = spectral_bipartition(sr);
  CHECK(p.degenerate);
  CHECK(p.cluster_1 == std::vector<Index>{0, 1, 2, 3});
  CHECK(p.cluster_2.empty());
}

TEST_CASE("two disconnected blocks are returned directly") {
  SelfRepresentation sr;
  sr.z = Matrix::Zero(5, 5);
  // Block {0, 2, 4} and block {1, 3}.
  sr.z(0, 2) = 0.9;
  sr.z(2, 4) = 0.8;
  sr.z(4, 0) = 0.7;
  sr.z(1, 3) = 0.6;
  sr.z(3, 1) = 0.5;
  const Bipartition p = spectral_bipartition(sr);
  CHECK(!p.degenerate);
  CHECK(p.cluster_1 == std::vector<Index>{0, 2, 4});
  CHECK(p.cluster_2 == std::vector<Index>{1, 3});
}

TEST_CASE("orthogonal one-dimensional subspaces are recovered") {
  Rng rng(5);
  const Matrix c = two_block_matrix(4, 3, rng);
  const SelfRepresentation sr = self_representation(c, 0.5);
  const Bipartition p = spectral_bipartition(sr);
  CHECK(!p.degenerate);
  CHECK(p.cluster_1 == std::vector<Index>{0, 1, 2, 3});
  CHECK(p.cluster_2 == std::vector<Index>{4, 5, 6});
}

TEST_CASE("cluster_1 always holds the lowest index") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix c(7, 7);
    for (Index i = 0; i < 7; ++i) {
      for (Index j = 0; j < 7; ++j) c(i, j) = rng.normal();
    }
    const Bipartition p = spectral_bipartition(self_representation(c, 0.2));
    if (p.cluster_1.empty()) continue;
    CHECK(p.cluster_1.front() == 0);
    std::vector<Index> all = p.cluster_1;
    all.insert(all.end(), p.cluster_2.begin(), p.cluster_2.end());
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<Index>{0, 1, 2, 3, 4, 5, 6});
  }
}

TEST_CASE("fit score is zero for an exact low-rank fit") {
  Rng rng(7);
  const int k = 2;  // rank budget K^2 = 4
  const Index m = 6;
  Matrix f(m, 4);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < 4; ++j) f(i, j) = rng.normal();
  }
  const Matrix c = f * f.transpose();
  Matrix sigma = c;
  sigma.diagonal().setOnes();  // the diagonal is masked out of the numerator
  const AgreementEstimate est = full_estimate(sigma);
  const std::vector<Index> cluster = {0, 1, 2, 3, 4, 5};
  CHECK(fit_score(est, c, cluster, k) <= 1e-12);
}

TEST_CASE("fit score sentinels") {
  const AgreementEstimate est = full_estimate(Matrix::Identity(6, 6));
  const Matrix c = Matrix::Identity(6, 6);
  CHECK(std::isinf(fit_score(est, c, {0, 1, 2}, 2)));  // card 3 < K^2 = 4

  AgreementEstimate unobserved = est;
  unobserved.omega.setZero();
  CHECK(std::isinf(fit_score(unobserved, c, {0, 1, 2, 3, 4}, 2)));

  CHECK_THROWS(fit_score(est, c, {}, 2));
}

TEST_CASE("honest-only fit score is small at scale") {
  Rng rng(8);
  const Index m = 30;
  std::vector<Matrix> confusions;
  confusions.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) confusions.push_back(random_honest_confusion(2, rng));
  const SimulatedCrowd crowd =
      simulate_honest_responses(confusions, Vector::Constant(2, 0.5), 100000, 0.2, rng);
  const AgreementEstimate est = empirical_agreement(crowd.responses);
  const RpcaDecomposition d = rpca_decompose(est);
  std::vector<Index> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), Index{0});
  CHECK(fit_score(est, d.c_hat, all, 2) <= 0.01);
}

TEST_CASE("majority side info on a balanced tie keeps the first cluster") {
  Rng rng(9);
  const Matrix c = two_block_matrix(4, 4, rng);
  const AnnotatorPartition p =
      cluster_annotators(full_estimate(c), c, 1, {0.5}, SideInfo::majority_honest());
  CHECK(!p.degenerate);
  CHECK(p.cluster_1 == std::vector<Index>{0, 1, 2, 3});
  CHECK(p.honest == std::vector<Index>{0, 1, 2, 3});
  CHECK(p.adversarial == std::vector<Index>{4, 5, 6, 7});
}

TEST_CASE("majority side info picks the larger cluster") {
  Rng rng(10);
  const Matrix c = two_block_matrix(3, 5, rng);
  const AnnotatorPartition p =
      cluster_annotators(full_estimate(c), c, 1, {0.5}, SideInfo::majority_honest());
  CHECK(p.honest == std::vector<Index>{3, 4, 5, 6, 7});
  CHECK(p.adversarial == std::vector<Index>{0, 1, 2});
}

TEST_CASE("trusted side info overrides size") {
  Rng rng(11);
  const Matrix c = two_block_matrix(5, 3, rng);
  const AnnotatorPartition p =
      cluster_annotators(full_estimate(c), c, 1, {0.5}, SideInfo::trusted_annotators({6}));
  CHECK(p.honest == std::vector<Index>{5, 6, 7});
  CHECK(p.adversarial == std::vector<Index>{0, 1, 2, 3, 4});
}

TEST_CASE("trusted annotators split across clusters is an error") {
  Rng rng(12);
  const Matrix c = two_block_matrix(4, 4, rng);
  CHECK_THROWS(
      cluster_annotators(full_estimate(c), c, 1, {0.5}, SideInfo::trusted_annotators({0, 6})));
}

TEST_CASE("degenerate clustering marks everyone honest") {
  const Matrix c = Matrix::Zero(5, 5);
  const AnnotatorPartition p =
      cluster_annotators(full_estimate(c), c, 1, {0.5, 5.0}, SideInfo::majority_honest());
  CHECK(p.degenerate);
  CHECK(p.honest == std::vector<Index>{0, 1, 2, 3, 4});
  CHECK(p.adversarial.empty());
  CHECK(p.diagnostics.size() == 2);
}

TEST_CASE("grid diagnostics cover every rho and the winner is on the grid") {
  Rng rng(13);
  const Matrix c = two_block_matrix(4, 5, rng);
  const std::vector<double> grid = {0.1, 0.5, 2.0};
  const AnnotatorPartition p =
      cluster_annotators(full_estimate(c), c, 1, grid, SideInfo::majority_honest());
  REQUIRE(p.diagnostics.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(p.diagnostics[i].rho == grid[i]);
  CHECK(std::find(grid.begin(), grid.end(), p.chosen_rho) != grid.end());
  CHECK_THROWS(cluster_annotators(full_estimate(c), c, 1, {}, SideInfo::majority_honest()));
}

TEST_CASE("clustering commutes with annotator permutations") {
  Rng rng(14);
  const Index m = 9;
  const Matrix c = two_block_matrix(4, 5, rng);
  // Apply a fixed permutation to rows and columns.
  const std::vector<Index> perm = {3, 7, 0, 5, 1, 8, 2, 6, 4};
  Matrix cp(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      cp(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = c(i, j);
    }
  }
  const AnnotatorPartition base =
      cluster_annotators(full_estimate(c), c, 1, {0.5}, SideInfo::majority_honest());
  const AnnotatorPartition permuted =
      cluster_annotators(full_estimate(cp), cp, 1, {0.5}, SideInfo::majority_honest());
  std::vector<Index> mapped;
  for (const Index i : base.honest) mapped.push_back(perm[static_cast<std::size_t>(i)]);
  std::sort(mapped.begin(), mapped.end());
  std::vector<Index> got = permuted.honest;
  std::sort(got.begin(), got.end());
  CHECK(same_partition(mapped, got));
}

TEST_CASE("well separated attack is detected end to end") {
  // Type A collusion on half the items with a third of the annotators
  // adversarial; detection should be near-perfect at this scale.
  Rng rng(15);
  const Index m = 60;
  const int k = 3;
  std::vector<Matrix> confusions;
  for (Index i = 0; i < m; ++i) confusions.push_back(random_honest_confusion(k, rng));
  const SimulatedCrowd crowd =
      simulate_honest_responses(confusions, Vector::Constant(k, 1.0 / k), 5000, 0.2, rng);
  AttackConfig attack;
  attack.type = AttackType::TypeA;
  attack.p_adv = 0.3;
  attack.p_corr = 0.5;
  attack.p_obs_adv = 0.2;
  const auto [attacked, truth] = apply_attack(crowd.responses, crowd.truth, attack, rng);

  const AgreementEstimate est = empirical_agreement(attacked);
  const RpcaDecomposition d = rpca_decompose(est);
  const AnnotatorPartition p = cluster_annotators(est, d.c_hat, k, default_rho_grid(),
                                                  SideInfo::majority_honest());

  std::vector<bool> is_adv(static_cast<std::size_t>(m), false);
  for (const Index a : truth.adversary_indices) is_adv[static_cast<std::size_t>(a)] = true;
  Index caught = 0;
  Index false_alarms = 0;
  for (const Index a : p.adversarial) {
    if (is_adv[static_cast<std::size_t>(a)]) {
      ++caught;
    } else {
      ++false_alarms;
    }
  }
  const auto num_adv = static_cast<double>(truth.adversary_indices.size());
  const double sensitivity = static_cast<double>(caught) / num_adv;
  const double specificity =
      1.0 - static_cast<double>(false_alarms) / (static_cast<double>(m) - num_adv);
  CHECK(sensitivity >= 0.95);
  CHECK(specificity >= 0.95);
}
