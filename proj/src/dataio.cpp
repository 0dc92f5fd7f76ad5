#include "debias/dataio.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "debias/errors.hpp"
#include "debias/special.hpp"

namespace debias {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delimiter)) cells.push_back(cell);
  if (!line.empty() && line.back() == delimiter) cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::optional<double> parse_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    const double v = std::stod(t, &pos);
    if (pos != t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

LoadResult load_records(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("load_records: cannot open " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw ConfigError("load_records: empty input file " + path);
  }
  const std::vector<std::string> header = split_line(header_line, schema.delimiter);

  auto column_index = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw ConfigError("load_records: column '" + name + "' not found in " + path);
  };

  std::vector<std::size_t> feature_idx;
  feature_idx.reserve(schema.feature_columns.size());
  for (const auto& name : schema.feature_columns) feature_idx.push_back(column_index(name));
  const std::size_t group_idx = column_index(schema.group_column);
  const std::size_t label_idx = column_index(schema.label_column);

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_line(line, schema.delimiter));
  }
  if (rows.empty()) throw ConfigError("load_records: no data rows in " + path);

  // Column typing: a feature column is numeric when at least half of its
  // well-formed cells parse as numbers; otherwise it is categorical and gets
  // one-hot encoded over its observed levels.
  const std::size_t n_feat = feature_idx.size();
  std::vector<bool> numeric(n_feat, true);
  std::vector<std::vector<std::string>> levels(n_feat);
  for (std::size_t j = 0; j < n_feat; ++j) {
    std::size_t parsed = 0, present = 0;
    for (const auto& row : rows) {
      if (feature_idx[j] >= row.size()) continue;
      ++present;
      if (parse_double(row[feature_idx[j]])) ++parsed;
    }
    numeric[j] = present == 0 || parsed * 2 >= present;
    if (!numeric[j]) {
      std::map<std::string, bool> seen;
      for (const auto& row : rows) {
        if (feature_idx[j] < row.size()) seen[trim(row[feature_idx[j]])] = true;
      }
      for (const auto& [level, _] : seen) levels[j].push_back(level);
    }
  }

  LoadResult out;
  for (std::size_t j = 0; j < n_feat; ++j) {
    if (numeric[j]) {
      out.feature_names.push_back(schema.feature_columns[j]);
    } else {
      for (const auto& level : levels[j]) {
        out.feature_names.push_back(schema.feature_columns[j] + "=" + level);
      }
    }
  }

  for (const auto& row : rows) {
    const std::size_t needed =
        std::max({*std::max_element(feature_idx.begin(), feature_idx.end()),
                  group_idx, label_idx});
    if (needed >= row.size()) {
      ++out.skipped;
      continue;
    }
    RawRecord rec;
    bool ok = true;
    for (std::size_t j = 0; j < n_feat && ok; ++j) {
      const std::string& cell = row[feature_idx[j]];
      if (numeric[j]) {
        const auto v = parse_double(cell);
        if (!v) {
          ok = false;
        } else {
          rec.features.push_back(*v);
        }
      } else {
        const std::string t = trim(cell);
        for (const auto& level : levels[j]) {
          rec.features.push_back(level == t ? 1.0 : 0.0);
        }
      }
    }
    const auto label = parse_double(row[label_idx]);
    if (!ok || !label || (*label != 0.0 && *label != 1.0)) {
      ++out.skipped;
      continue;
    }
    rec.label = static_cast<int>(*label);
    rec.group = trim(row[group_idx]);
    out.records.push_back(std::move(rec));
  }
  if (out.records.empty()) {
    throw ConfigError("load_records: no parseable data rows in " + path);
  }
  return out;
}

ScoreMapping fit_score_mapping(const std::vector<RawRecord>& records,
                               std::size_t iterations, double learning_rate,
                               std::vector<double>* loss_trace) {
  if (records.size() < 2) {
    throw std::domain_error("fit_score_mapping: need at least 2 records");
  }
  const std::size_t dim = records.front().features.size();
  bool has0 = false, has1 = false;
  for (const auto& rec : records) {
    if (rec.features.size() != dim) {
      throw std::domain_error("fit_score_mapping: inconsistent feature dimensions");
    }
    (rec.label == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) {
    throw std::domain_error("fit_score_mapping: both label classes required");
  }

  const auto n = static_cast<Eigen::Index>(records.size());
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      x(i, j) = records[static_cast<std::size_t>(i)].features[static_cast<std::size_t>(j)];
    }
    y(i) = records[static_cast<std::size_t>(i)].label;
  }

  ScoreMapping mapping;
  mapping.feature_mean.resize(dim);
  mapping.feature_std.resize(dim);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    mapping.feature_mean[static_cast<std::size_t>(j)] = mean;
    mapping.feature_std[static_cast<std::size_t>(j)] = sd > 0.0 ? sd : 1.0;
    x.col(j) = (x.col(j).array() - mean) / mapping.feature_std[static_cast<std::size_t>(j)];
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t it = 0; it < iterations; ++it) {
    const Eigen::VectorXd z = x * w + Eigen::VectorXd::Constant(n, b);
    const Eigen::VectorXd p = z.unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd resid = p - y;
    w -= learning_rate * inv_n * (x.transpose() * resid);
    b -= learning_rate * inv_n * resid.sum();
    if (loss_trace != nullptr) {
      const Eigen::VectorXd z2 = x * w + Eigen::VectorXd::Constant(n, b);
      double loss = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        // log(1 + exp(-margin)) in the stable split form.
        const double margin = (y(i) > 0.5 ? 1.0 : -1.0) * z2(i);
        loss += margin > 0.0 ? std::log1p(std::exp(-margin))
                             : -margin + std::log1p(std::exp(margin));
      }
      loss_trace->push_back(loss * inv_n);
    }
  }

  mapping.weights.assign(w.data(), w.data() + w.size());
  mapping.intercept = b;
  mapping.squash = true;
  return mapping;
}

double score(const ScoreMapping& mapping, const RawRecord& record) {
  if (record.features.size() != mapping.weights.size()) {
    throw std::domain_error("score: feature dimension mismatch");
  }
  double z = mapping.intercept;
  for (std::size_t j = 0; j < mapping.weights.size(); ++j) {
    z += mapping.weights[j] *
         (record.features[j] - mapping.feature_mean[j]) / mapping.feature_std[j];
  }
  if (!mapping.squash) return z;
  return std::clamp(sigmoid(z), 1e-9, 1.0 - 1e-9);
}

DistEstimate fit_distribution(const std::vector<double>& samples,
                              FamilyKind kind, double tau) {
  if (samples.size() < 10) {
    throw std::domain_error("fit_distribution: need at least 10 samples");
  }
  for (double s : samples) {
    if (!in_support(kind, s)) {
      throw std::domain_error("fit_distribution: sample outside family support");
    }
  }

  if (kind.family == Family::GaussianLocation) {
    double sum = 0.0;
    for (double s : samples) sum += s;
    return DistEstimate::from_psi(kind, sum / static_cast<double>(samples.size()), tau);
  }

  // BetaAlpha with beta fixed: the alpha-dependent part of the mean
  // log-likelihood is (alpha - 1) * mean(log x) - log B(alpha, beta).
  // Concave in alpha, so golden-section on log(alpha) finds the maximum.
  double mean_log = 0.0;
  for (double s : samples) mean_log += std::log(s);
  mean_log /= static_cast<double>(samples.size());
  const double beta = kind.fixed;
  auto neg_ll = [&](double log_alpha) {
    const double alpha = std::exp(log_alpha);
    return -((alpha - 1.0) * mean_log - log_beta(alpha, beta));
  };
  double a = std::log(1e-3), b = std::log(1e3);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = neg_ll(c), fd = neg_ll(d);
  while (b - a > 1e-11) {
    if (fc <= fd) {
      b = d; d = c; fd = fc;
      c = b - invphi * (b - a);
      fc = neg_ll(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + invphi * (b - a);
      fd = neg_ll(d);
    }
  }
  return DistEstimate::from_psi(kind, std::exp(0.5 * (a + b)), tau);
}

std::vector<AgentArrival> synth_stream(const PopulationSpec& truth,
                                       std::size_t n,
                                       const RandomStream& stream,
                                       std::uint64_t t_start) {
  truth.validate();
  std::vector<double> cumw(truth.group_weights.size());
  double acc = 0.0;
  for (std::size_t g = 0; g < cumw.size(); ++g) {
    acc += truth.group_weights[g];
    cumw[g] = acc;
  }

  std::vector<AgentArrival> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t t = t_start + i;
    AgentArrival a;
    a.t = t;
    const double ug = stream.uniform(t, Draw::Group);
    std::size_t g = 0;
    while (g + 1 < cumw.size() && ug >= cumw[g]) ++g;
    a.group = static_cast<std::uint32_t>(g);
    const auto& ge = truth.truth.group(g);
    a.y_true = stream.uniform(t, Draw::Label) < ge.alpha[1] ? 1 : 0;
    a.x = quantile(ge.dist[a.y_true], stream.uniform(t, Draw::Feature));
    out.push_back(a);
  }
  return out;
}

}  // namespace debias
