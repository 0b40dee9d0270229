#include "crowdguard/agreement.hpp"

#include <fstream>
#include <stdexcept>

namespace crowdguard {

AgreementEstimate empirical_agreement(const AnnotationMatrix& a, int min_overlap) {
  if (min_overlap < 1) throw std::invalid_argument("min_overlap must be >= 1");
  const Index m_count = a.num_annotators();
  if (m_count == 0 || a.num_responses() == 0) {
    throw std::invalid_argument("empirical_agreement: empty annotation matrix");
  }

  IntMatrix co = IntMatrix::Zero(m_count, m_count);
  IntMatrix agree = IntMatrix::Zero(m_count, m_count);
  for (Index n = 0; n < a.num_items(); ++n) {
    const auto& col = a.item_responses(n);
    for (std::size_t i = 0; i < col.size(); ++i) {
      co(col[i].first, col[i].first) += 1;
      for (std::size_t j = i + 1; j < col.size(); ++j) {
        const Index mi = col[i].first;
        const Index mj = col[j].first;
        co(mi, mj) += 1;
        co(mj, mi) += 1;
        if (col[i].second == col[j].second) {
          agree(mi, mj) += 1;
          agree(mj, mi) += 1;
        }
      }
    }
  }

  AgreementEstimate est;
  est.sigma_hat = Matrix::Zero(m_count, m_count);
  est.omega = Matrix::Zero(m_count, m_count);
  est.co_counts = co;
  for (Index i = 0; i < m_count; ++i) {
    if (co(i, i) >= 1) {  // self-agreement is 1 by definition
      est.sigma_hat(i, i) = 1.0;
      est.omega(i, i) = 1.0;
    }
    for (Index j = i + 1; j < m_count; ++j) {
      if (co(i, j) < min_overlap) continue;
      const double sigma = static_cast<double>(agree(i, j)) / static_cast<double>(co(i, j));
      est.sigma_hat(i, j) = sigma;
      est.sigma_hat(j, i) = sigma;
      est.omega(i, j) = 1.0;
      est.omega(j, i) = 1.0;
    }
  }
  return est;
}

double oracle_agreement(const Matrix& h_a, const Matrix& h_b, const Vector& pi) {
  const Index k = pi.size();
  if (h_a.rows() != k || h_a.cols() != k || h_b.rows() != k || h_b.cols() != k) {
    throw std::invalid_argument("oracle_agreement: dimension mismatch");
  }
  return (h_a * pi.asDiagonal() * h_b.transpose()).trace();
}

Vector oracle_vector(const Matrix& h, const Vector& pi) {
  const Index k = pi.size();
  if (h.rows() != k || h.cols() != k) {
    throw std::invalid_argument("oracle_vector: dimension mismatch");
  }
  const Matrix scaled = pi.array().sqrt().matrix().asDiagonal() * h.transpose();
  return Eigen::Map<const Vector>(scaled.data(), k * k);
}

void write_agreement_csv(const AgreementEstimate& est, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "m,m2,sigma,count\n";
  for (Index i = 0; i < est.sigma_hat.rows(); ++i) {
    for (Index j = i; j < est.sigma_hat.cols(); ++j) {
      if (est.omega(i, j) == 0.0) continue;
      out << (i + 1) << "," << (j + 1) << "," << est.sigma_hat(i, j) << ","
          << est.co_counts(i, j) << "\n";
    }
  }
}

}  // namespace crowdguard
