#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "debias/distribution.hpp"
#include "debias/engine.hpp"
#include "debias/population.hpp"
#include "debias/random.hpp"

namespace debias {

struct RawRecord {
  std::vector<double> features;
  std::string group;
  int label = 0;  // {0,1}
};

struct CsvSchema {
  std::vector<std::string> feature_columns;
  std::string group_column;
  std::string label_column;
  char delimiter = ',';
};

struct LoadResult {
  std::vector<RawRecord> records;
  std::size_t skipped = 0;  // rows dropped for unparseable cells
  // Expanded feature names after one-hot encoding of non-numeric columns.
  std::vector<std::string> feature_names;
};

// Parse a delimited text file with a header row. Numeric feature columns are
// read as-is; columns that are predominantly non-numeric are one-hot encoded
// (levels sorted lexicographically). Rows with unparseable numeric or label
// cells are counted and skipped. Throws ConfigError for a missing schema
// column or an empty file, IoError when the file cannot be read.
LoadResult load_records(const std::string& path, const CsvSchema& schema);

// Logistic score reduction to one dimension. Standardization statistics are
// recorded so scoring unseen records is self-contained.
struct ScoreMapping {
  std::vector<double> weights;  // over standardized features
  double intercept = 0.0;
  bool squash = true;  // map through the logistic function into (0,1)
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
};

// Full-batch gradient descent on the logistic loss, zero-initialized and
// deterministic. Appends the loss after every iteration to *loss_trace when
// given. Throws std::domain_error when only one label class is present.
ScoreMapping fit_score_mapping(const std::vector<RawRecord>& records,
                               std::size_t iterations, double learning_rate,
                               std::vector<double>* loss_trace = nullptr);

// w . standardize(x) + b, squashed into (0,1) and clamped to
// [1e-9, 1 - 1e-9] when the mapping squashes. Throws std::domain_error on a
// feature-dimension mismatch.
double score(const ScoreMapping& mapping, const RawRecord& record);

// Maximum-likelihood fit of the family's free parameter with the fixed
// parameter held: GaussianLocation uses the sample mean; BetaAlpha maximizes
// the Beta log-likelihood in alpha by golden-section search. Requires >= 10
// samples, all inside the family support.
DistEstimate fit_distribution(const std::vector<double>& samples,
                              FamilyKind kind, double tau);

// Deterministic synthetic arrival sequence: group by the spec's weights,
// label by the group's label fractions, feature by inverse-transform
// sampling from the true (group, label) family. Arrival indices start at
// t_start (all draws are keyed by the arrival index, so streams generated in
// parts match streams generated whole).
std::vector<AgentArrival> synth_stream(const PopulationSpec& truth,
                                       std::size_t n,
                                       const RandomStream& stream,
                                       std::uint64_t t_start = 0);

}  // namespace debias
