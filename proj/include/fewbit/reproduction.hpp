#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fewbit/qtable.hpp"

namespace fewbit {

// Published optimal errors for uniform weight on [-10, 10].
struct PublishedError {
  const char* activation;
  int bits;
  double value;
};

std::span<const PublishedError> published_errors();

// |achieved - published| <= max(5% of published, 5e-4); a published 0 must be hit exactly.
bool within_published_tolerance(double achieved, double published);

struct ReproductionRow {
  std::string activation;
  int bits = 0;
  double published = 0.0;
  double dp_error = 0.0;
  double achieved_error = 0.0;
  double reevaluated_error = 0.0;  // table_error() on the finished table
  double relative_deviation = 0.0;
  bool within_tolerance = false;
  QuantizationTable table;
};

// Builds every published configuration. Even-derivative activations use
// symmetric tables. Rows come back in published order regardless of jobs.
std::vector<ReproductionRow> reproduce_published(const TableBuildOptions& base,
                                                 unsigned jobs = 1);

}  // namespace fewbit
