#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "crowdguard/adversary.hpp"
#include "crowdguard/agreement.hpp"
#include "crowdguard/annotations.hpp"
#include "crowdguard/rng.hpp"

using namespace crowdguard;

namespace {

SimulatedCrowd honest_crowd(Index m, Index n, int k, double p_obs, Rng& rng) {
  std::vector<Matrix> confusions;
  for (Index i = 0; i < m; ++i) confusions.push_back(random_honest_confusion(k, rng));
  return simulate_honest_responses(confusions, Vector::Constant(k, 1.0 / k), n, p_obs, rng);
}

}  // namespace

TEST_CASE("honest confusion draws satisfy the assumptions") {
  Rng rng(41);
  for (const int k : {2, 3, 5}) {
    for (int draw = 0; draw < (k == 2 ? 10000 : 1000); ++draw) {
      const Matrix h = random_honest_confusion(k, rng);
      REQUIRE(h.rows() == k);
      REQUIRE(h.cols() == k);
      for (Index c = 0; c < k; ++c) {
        REQUIRE(h.col(c).sum() == doctest::Approx(1.0).epsilon(1e-9));
        REQUIRE(h.col(c).minCoeff() >= 0.0);
        REQUIRE(h(c, c) > 1.0 / k);
      }
    }
  }
  CHECK_THROWS(random_honest_confusion(1, rng));
}

TEST_CASE("zero adversary fraction passes the input through") {
  Rng data_rng(42);
  const SimulatedCrowd crowd = honest_crowd(6, 100, 3, 0.5, data_rng);
  AttackConfig cfg;
  cfg.p_adv = 0.0;
  cfg.p_corr = 0.5;
  Rng attack_rng(7);
  const auto [attacked, truth] = apply_attack(crowd.responses, crowd.truth, cfg, attack_rng);
  CHECK(attacked == crowd.responses);
  CHECK(truth.adversary_indices.empty());
  CHECK(truth.wrong_labels.empty());
}

TEST_CASE("type A with full corruption colludes on every item") {
  Rng data_rng(43);
  const SimulatedCrowd crowd = honest_crowd(10, 80, 4, 0.5, data_rng);
  AttackConfig cfg;
  cfg.type = AttackType::TypeA;
  cfg.p_adv = 0.3;
  cfg.p_corr = 1.0;
  cfg.p_obs_adv = 1.0;
  Rng attack_rng(8);
  const auto [attacked, truth] = apply_attack(crowd.responses, crowd.truth, cfg, attack_rng);
  CHECK(truth.adversary_indices.size() == 3);  // floor(10 * 0.3)
  CHECK(truth.corrupted_items.size() == 80);
  for (Index n = 0; n < 80; ++n) {
    const int wrong = truth.wrong_labels.at(n);
    CHECK(wrong != crowd.truth[static_cast<std::size_t>(n)]);
    CHECK(wrong >= 1);
    CHECK(wrong <= 4);
    for (const Index m : truth.adversary_indices) {
      CHECK(attacked.response(m, n) == wrong);  // every adversary answers, identically
    }
  }
}

TEST_CASE("type A with no corruption is truthful") {
  Rng data_rng(44);
  const SimulatedCrowd crowd = honest_crowd(8, 120, 3, 0.5, data_rng);
  AttackConfig cfg;
  cfg.type = AttackType::TypeA;
  cfg.p_adv = 0.25;
  cfg.p_corr = 0.0;
  cfg.p_obs_adv = 0.7;
  Rng attack_rng(9);
  const auto [attacked, truth] = apply_attack(crowd.responses, crowd.truth, cfg, attack_rng);
  CHECK(truth.corrupted_items.empty());
  for (const Index m : truth.adversary_indices) {
    for (Index n = 0; n < 120; ++n) {
      const int response = attacked.response(m, n);
      if (response != 0) CHECK(response == crowd.truth[static_cast<std::size_t>(n)]);
    }
  }
}

TEST_CASE("honest rows are untouched and structure is bookkept") {
  Rng data_rng(45);
  const SimulatedCrowd crowd = honest_crowd(12, 200, 3, 0.4, data_rng);
  AttackConfig cfg;
  cfg.type = AttackType::TypeB;
  cfg.p_adv = 0.4;
  cfg.p_corr = 0.3;
  cfg.p_obs_adv = 0.5;
  Rng attack_rng(10);
  const auto [attacked, truth] = apply_attack(crowd.responses, crowd.truth, cfg, attack_rng);

  CHECK(truth.adversary_indices.size() == 4);
  CHECK(std::is_sorted(truth.adversary_indices.begin(), truth.adversary_indices.end()));
  CHECK(truth.corrupted_items.size() == 60);
  CHECK(std::is_sorted(truth.corrupted_items.begin(), truth.corrupted_items.end()));
  CHECK(truth.type_b_confusions.size() == 4);
  for (const Matrix& h : truth.type_b_confusions) CHECK_NOTHROW(validate_confusion(h));
  CHECK(truth.wrong_labels.size() == 60);

  const std::set<Index> adv(truth.adversary_indices.begin(), truth.adversary_indices.end());
  for (Index m = 0; m < 12; ++m) {
    if (adv.count(m)) continue;
    CHECK(attacked.annotator_responses(m) == crowd.responses.annotator_responses(m));
  }
  // Collusion invariant on corrupted items.
  for (const Index n : truth.corrupted_items) {
    for (const Index m : truth.adversary_indices) {
      const int response = attacked.response(m, n);
      if (response != 0) CHECK(response == truth.wrong_labels.at(n));
    }
  }
}

TEST_CASE("attacks are deterministic under one rng state") {
  Rng data_rng(46);
  const SimulatedCrowd crowd = honest_crowd(10, 100, 3, 0.4, data_rng);
  AttackConfig cfg;
  cfg.type = AttackType::TypeB;
  cfg.p_adv = 0.3;
  cfg.p_corr = 0.5;
  Rng r1(99);
  Rng r2(99);
  const auto [a1, t1] = apply_attack(crowd.responses, crowd.truth, cfg, r1);
  const auto [a2, t2] = apply_attack(crowd.responses, crowd.truth, cfg, r2);
  CHECK(a1 == a2);
  CHECK(t1.adversary_indices == t2.adversary_indices);
  CHECK(t1.corrupted_items == t2.corrupted_items);
  CHECK(t1.wrong_labels == t2.wrong_labels);
}

TEST_CASE("adversary observation probability controls response density") {
  Rng data_rng(47);
  const SimulatedCrowd crowd = honest_crowd(5, 2000, 3, 0.5, data_rng);
  AttackConfig cfg;
  cfg.type = AttackType::TypeA;
  cfg.p_adv = 0.4;
  cfg.p_corr = 0.5;
  cfg.p_obs_adv = 0.2;
  Rng attack_rng(11);
  const auto [attacked, truth] = apply_attack(crowd.responses, crowd.truth, cfg, attack_rng);
  for (const Index m : truth.adversary_indices) {
    const double density =
        static_cast<double>(attacked.annotator_responses(m).size()) / 2000.0;
    CHECK(density == doctest::Approx(0.2).epsilon(0.25));  // within 5 sigma
  }
}

TEST_CASE("type B clean-item agreement matches the oracle rate") {
  // Two adversaries answering every clean item through their drawn confusion
  // matrices should agree at the rate predicted from those matrices.
  Rng data_rng(48);
  const Index n_items = 100000;
  const SimulatedCrowd crowd = honest_crowd(4, n_items, 3, 0.02, data_rng);
  AttackConfig cfg;
  cfg.type = AttackType::TypeB;
  cfg.p_adv = 0.5;  // 2 of 4 annotators
  cfg.p_corr = 0.0;
  cfg.p_obs_adv = 1.0;
  Rng attack_rng(12);
  const auto [attacked, truth] = apply_attack(crowd.responses, crowd.truth, cfg, attack_rng);
  REQUIRE(truth.adversary_indices.size() == 2);
  const Index a = truth.adversary_indices[0];
  const Index b = truth.adversary_indices[1];
  Index agree = 0;
  for (Index n = 0; n < n_items; ++n) {
    if (attacked.response(a, n) == attacked.response(b, n)) ++agree;
  }
  const double empirical = static_cast<double>(agree) / static_cast<double>(n_items);
  const double oracle = oracle_agreement(truth.type_b_confusions[0], truth.type_b_confusions[1],
                                         Vector::Constant(3, 1.0 / 3.0));
  CHECK(std::abs(empirical - oracle) <= 0.02);
}

TEST_CASE("attack validation") {
  const AnnotationMatrix a(2, 2, 2, {{0, 0, 1}, {1, 1, 2}});
  Rng rng(1);
  AttackConfig cfg;
  cfg.p_adv = 1.5;
  CHECK_THROWS(apply_attack(a, {1, 2}, cfg, rng));
  cfg.p_adv = 0.5;
  CHECK_THROWS(apply_attack(a, {1}, cfg, rng));     // truth length mismatch
  CHECK_THROWS(apply_attack(a, {1, 3}, cfg, rng));  // truth label out of range
}
