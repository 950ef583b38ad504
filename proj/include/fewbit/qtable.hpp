#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fewbit/activations.hpp"
#include "fewbit/quadrature.hpp"

namespace fewbit {

inline constexpr int kTableFormatVersion = 1;

// Malformed, mismatched or invariant-violating table data.
class TableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A b-bit piecewise-constant surrogate for an activation derivative.
//
// Segment i covers [boundaries[i-1], boundaries[i]) with the outer segments
// extending to -inf / +inf. With exploit_symmetry the key is |x| and all
// boundaries are nonnegative.
struct QuantizationTable {
  std::string activation;
  int bits = 1;
  bool exploit_symmetry = false;
  WeightSpec weight;
  std::vector<double> boundaries;  // interior, num_levels - 1 entries
  std::vector<double> levels;      // num_levels entries
  double achieved_error = 0.0;
  std::size_t grid_n = 0;
  std::size_t refine_steps = 0;

  std::size_t num_levels() const { return levels.size(); }

  // Throws TableError on any broken invariant.
  void validate() const;

  friend bool operator==(const QuantizationTable&, const QuantizationTable&) = default;
};

struct TableBuildOptions {
  std::size_t grid_n = 4000;
  std::size_t refine_steps = 200;
  double learning_rate = 1e-3;
  bool exploit_symmetry = false;
};

struct TableBuild {
  QuantizationTable table;
  double dp_error;       // DP optimum over grid nodes
  double refined_error;  // objective after refinement (== table.achieved_error)
};

// grid -> DP with 2^bits segments -> optional refinement -> table. Refinement
// is skipped when the DP fit is already exact.
TableBuild build_table_detailed(const ActivationSpec& act, const WeightSpec& weight, int bits,
                                const TableBuildOptions& options = {});
QuantizationTable build_table(const ActivationSpec& act, const WeightSpec& weight, int bits,
                              const TableBuildOptions& options = {});

// The target a table was solved against (folded when exploit_symmetry).
ApproxTarget table_target(const QuantizationTable& table);

// Segment index of x. Throws std::invalid_argument on NaN.
std::size_t lookup_index(const QuantizationTable& table, double x);

// Throws std::out_of_range for index >= num_levels.
double lookup_level(const QuantizationTable& table, std::size_t index);

// Weighted squared error of the table's q against f', integrated over the
// whole weight support [A, B] through lookup_index.
double table_error(const QuantizationTable& table);

std::string format_table(const QuantizationTable& table);
QuantizationTable parse_table(std::string_view text);

void save_table(const QuantizationTable& table, const std::filesystem::path& path);
QuantizationTable load_table(const std::filesystem::path& path);

}  // namespace fewbit
