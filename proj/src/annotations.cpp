#include "crowdguard/annotations.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crowdguard {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_int(const std::string& s, long long& value) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc{} && ptr == last;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no,
                             const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

/// K declared in a header token `K=<int>` (case-insensitive), or 0.
int header_num_classes(const std::string& line) {
  for (const std::string& field : split_csv(line)) {
    if (field.size() > 2 && (field[0] == 'K' || field[0] == 'k') && field[1] == '=') {
      long long k = 0;
      if (parse_int(field.substr(2), k) && k >= 2) return static_cast<int>(k);
    }
  }
  return 0;
}

}  // namespace

AnnotationMatrix::AnnotationMatrix(Index num_annotators, Index num_items, int num_classes,
                                   const std::vector<Response>& responses)
    : num_classes_(num_classes) {
  if (num_annotators < 0 || num_items < 0) {
    throw std::invalid_argument("AnnotationMatrix: negative dimensions");
  }
  if (num_classes < 2) {
    throw std::invalid_argument("AnnotationMatrix: num_classes must be >= 2");
  }
  by_annotator_.resize(static_cast<std::size_t>(num_annotators));
  by_item_.resize(static_cast<std::size_t>(num_items));
  for (const Response& r : responses) {
    if (r.annotator < 0 || r.annotator >= num_annotators) {
      throw std::invalid_argument("AnnotationMatrix: annotator index out of range");
    }
    if (r.item < 0 || r.item >= num_items) {
      throw std::invalid_argument("AnnotationMatrix: item index out of range");
    }
    if (r.label < 1 || r.label > num_classes) {
      throw std::invalid_argument("AnnotationMatrix: label " + std::to_string(r.label) +
                                  " outside {1.." + std::to_string(num_classes) + "}");
    }
    by_annotator_[static_cast<std::size_t>(r.annotator)].emplace_back(r.item, r.label);
    by_item_[static_cast<std::size_t>(r.item)].emplace_back(r.annotator, r.label);
  }
  num_responses_ = static_cast<Index>(responses.size());
  for (auto& row : by_annotator_) {
    std::sort(row.begin(), row.end());
    for (std::size_t i = 1; i < row.size(); ++i) {
      if (row[i].first == row[i - 1].first) {
        throw std::invalid_argument("AnnotationMatrix: duplicate (annotator, item) response");
      }
    }
  }
  for (auto& col : by_item_) std::sort(col.begin(), col.end());
}

int AnnotationMatrix::response(Index annotator, Index item) const {
  const auto& row = annotator_responses(annotator);
  auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(item, 0));
  if (it != row.end() && it->first == item) return it->second;
  return 0;
}

std::vector<Response> AnnotationMatrix::to_triplets() const {
  std::vector<Response> out;
  out.reserve(static_cast<std::size_t>(num_responses_));
  for (Index m = 0; m < num_annotators(); ++m) {
    for (const auto& [item, label] : annotator_responses(m)) {
      out.push_back({m, item, label});
    }
  }
  return out;
}

bool AnnotationMatrix::operator==(const AnnotationMatrix& other) const {
  return num_classes_ == other.num_classes_ && by_item_.size() == other.by_item_.size() &&
         by_annotator_ == other.by_annotator_;
}

AnnotationMatrix load_annotations(const std::string& path, AnnotationFormat format,
                                  int num_classes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::vector<Response> responses;
  Index max_annotator = 0;
  Index max_item = 0;
  int max_label = 0;
  int header_k = 0;
  std::string line;
  std::size_t line_no = 0;

  if (format == AnnotationFormat::TripletCsv) {
    bool first_content = true;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = trim(line);
      if (stripped.empty()) continue;
      const std::vector<std::string> fields = split_csv(stripped);
      long long item = 0;
      long long annotator = 0;
      long long label = 0;
      const bool numeric = fields.size() == 3 && parse_int(fields[0], item) &&
                           parse_int(fields[1], annotator) && parse_int(fields[2], label);
      if (!numeric) {
        if (first_content) {  // header row
          header_k = header_num_classes(stripped);
          first_content = false;
          continue;
        }
        parse_fail(path, line_no, "expected `item,annotator,label`, got `" + stripped + "`");
      }
      first_content = false;
      if (item < 1 || annotator < 1) parse_fail(path, line_no, "indices must be >= 1");
      if (label < 1) parse_fail(path, line_no, "label must be a positive integer");
      responses.push_back({static_cast<Index>(annotator - 1), static_cast<Index>(item - 1),
                           static_cast<int>(label)});
      max_annotator = std::max(max_annotator, static_cast<Index>(annotator));
      max_item = std::max(max_item, static_cast<Index>(item));
      max_label = std::max(max_label, static_cast<int>(label));
    }
  } else {
    Index row_len = -1;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = trim(line);
      if (stripped.empty()) continue;
      const std::vector<std::string> fields = split_csv(stripped);
      if (row_len < 0) {
        row_len = static_cast<Index>(fields.size());
      } else if (static_cast<Index>(fields.size()) != row_len) {
        parse_fail(path, line_no, "ragged row: expected " + std::to_string(row_len) + " fields");
      }
      const Index annotator = max_annotator++;
      for (std::size_t j = 0; j < fields.size(); ++j) {
        long long label = 0;
        if (!parse_int(fields[j], label) || label < 0) {
          parse_fail(path, line_no, "expected a non-negative integer, got `" + fields[j] + "`");
        }
        if (label == 0) continue;  // missing
        responses.push_back({annotator, static_cast<Index>(j), static_cast<int>(label)});
        max_label = std::max(max_label, static_cast<int>(label));
      }
    }
    max_item = std::max<Index>(row_len, 0);
  }

  if (num_classes > 0 && header_k > 0 && num_classes != header_k) {
    throw std::runtime_error(path + ": header declares K=" + std::to_string(header_k) +
                             " but K=" + std::to_string(num_classes) + " was requested");
  }
  int k = num_classes > 0 ? num_classes : header_k;
  if (k == 0) k = std::max(max_label, 2);
  if (max_label > k) {
    throw std::runtime_error(path + ": label " + std::to_string(max_label) +
                             " exceeds K=" + std::to_string(k));
  }
  return AnnotationMatrix(max_annotator, max_item, k, responses);
}

void save_annotations(const AnnotationMatrix& a, const std::string& path,
                      AnnotationFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (format == AnnotationFormat::TripletCsv) {
    out << "item,annotator,label,K=" << a.num_classes() << "\n";
    for (const Response& r : a.to_triplets()) {
      out << (r.item + 1) << "," << (r.annotator + 1) << "," << r.label << "\n";
    }
  } else {
    for (Index m = 0; m < a.num_annotators(); ++m) {
      const auto& row = a.annotator_responses(m);
      std::size_t next = 0;
      for (Index n = 0; n < a.num_items(); ++n) {
        int label = 0;
        if (next < row.size() && row[next].first == n) label = row[next++].second;
        out << label << (n + 1 < a.num_items() ? "," : "");
      }
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

DropResult drop_constant_annotators(const AnnotationMatrix& a) {
  std::vector<Index> removed;
  std::vector<Index> kept;
  for (Index m = 0; m < a.num_annotators(); ++m) {
    const auto& row = a.annotator_responses(m);
    bool constant = true;  // vacuously true for empty and single-response rows
    for (std::size_t i = 1; i < row.size(); ++i) {
      if (row[i].second != row[0].second) {
        constant = false;
        break;
      }
    }
    (constant ? removed : kept).push_back(m);
  }
  std::vector<Response> responses;
  for (std::size_t new_m = 0; new_m < kept.size(); ++new_m) {
    for (const auto& [item, label] : a.annotator_responses(kept[new_m])) {
      responses.push_back({static_cast<Index>(new_m), item, label});
    }
  }
  return {AnnotationMatrix(static_cast<Index>(kept.size()), a.num_items(), a.num_classes(),
                           responses),
          removed};
}

void validate_confusion(const Matrix& h) {
  if (h.rows() != h.cols() || h.rows() < 2) {
    throw std::invalid_argument("confusion matrix must be K x K with K >= 2");
  }
  if ((h.array() < 0.0).any()) {
    throw std::invalid_argument("confusion matrix has negative entries");
  }
  for (Index c = 0; c < h.cols(); ++c) {
    if (std::abs(h.col(c).sum() - 1.0) > 1e-9) {
      throw std::invalid_argument("confusion matrix column " + std::to_string(c) +
                                  " does not sum to 1");
    }
  }
}

void validate_priors(const Vector& pi) {
  if (pi.size() < 2) throw std::invalid_argument("priors must have length K >= 2");
  if ((pi.array() < 0.0).any()) throw std::invalid_argument("priors have negative entries");
  if (std::abs(pi.sum() - 1.0) > 1e-9) throw std::invalid_argument("priors do not sum to 1");
}

SimulatedCrowd simulate_honest_responses(const std::vector<Matrix>& confusions,
                                         const Vector& priors, Index num_items,
                                         double p_obs, Rng& rng) {
  validate_priors(priors);
  const int k = static_cast<int>(priors.size());
  for (const Matrix& h : confusions) {
    validate_confusion(h);
    if (h.rows() != k) throw std::invalid_argument("confusion size does not match priors");
  }
  if (p_obs < 0.0 || p_obs > 1.0) throw std::invalid_argument("p_obs outside [0, 1]");

  std::vector<int> truth(static_cast<std::size_t>(num_items));
  for (Index n = 0; n < num_items; ++n) {
    truth[static_cast<std::size_t>(n)] = rng.categorical(priors) + 1;
  }
  std::vector<Response> responses;
  for (std::size_t m = 0; m < confusions.size(); ++m) {
    for (Index n = 0; n < num_items; ++n) {
      if (!rng.bernoulli(p_obs)) continue;
      const int y = truth[static_cast<std::size_t>(n)];
      const int label = rng.categorical(confusions[m].col(y - 1)) + 1;
      responses.push_back({static_cast<Index>(m), n, label});
    }
  }
  return {AnnotationMatrix(static_cast<Index>(confusions.size()), num_items, k, responses),
          truth};
}

}  // namespace crowdguard
