#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace fewbit {

// A pointwise nonlinearity together with its exact analytic derivative.
struct ActivationSpec {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> df;
  // True iff df(x) == df(-x) for all x.
  bool even_derivative = false;
  // Points where df is discontinuous. Quadrature splits panels there.
  std::vector<double> kinks;
};

// Names of the catalog entries, in display order.
const std::vector<std::string>& activation_names();

// Throws std::invalid_argument listing the catalog on an unknown name.
const ActivationSpec& get_activation(std::string_view name);

namespace selu_constants {
inline constexpr double kLambda = 1.0507009873554805;
inline constexpr double kAlpha = 1.6732632423543772;
}  // namespace selu_constants

}  // namespace fewbit
