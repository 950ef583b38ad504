#include "fewbit/activations.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fewbit {
namespace {

double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

std::vector<ActivationSpec> make_catalog() {
  using namespace selu_constants;
  std::vector<ActivationSpec> c;

  // df(0) = 1 so that x == 0 lands on the same side as the table's left-closed segments.
  c.push_back({"relu", [](double x) { return x > 0 ? x : 0.0; },
               [](double x) { return x >= 0 ? 1.0 : 0.0; }, false, {0.0}});

  c.push_back({"gelu", [](double x) { return x * normal_cdf(x); },
               [](double x) { return normal_cdf(x) + x * normal_pdf(x); }, false, {}});

  c.push_back({"swish", [](double x) { return x * sigmoid(x); },
               [](double x) {
                 const double s = sigmoid(x);
                 return s + x * s * (1.0 - s);
               },
               false, {}});

  c.push_back({"sigmoid", sigmoid,
               [](double x) {
                 // sigma(x)(1 - sigma(x)) = sigma(|x|) sigma(-|x|), exactly even in floating point.
                 const double a = std::abs(x);
                 return sigmoid(a) * sigmoid(-a);
               },
               true, {}});

  c.push_back({"tanh", [](double x) { return std::tanh(x); },
               [](double x) {
                 const double t = std::tanh(std::abs(x));
                 return (1.0 - t) * (1.0 + t);
               },
               true, {}});

  c.push_back({"selu",
               [](double x) { return x > 0 ? kLambda * x : kLambda * kAlpha * std::expm1(x); },
               [](double x) { return x > 0 ? kLambda : kLambda * kAlpha * std::exp(x); }, false,
               {0.0}});

  c.push_back({"softplus",
               [](double x) {
                 // log(1 + e^x) without overflow for large x.
                 return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
               },
               sigmoid, false, {}});
  return c;
}

const std::vector<ActivationSpec>& catalog() {
  static const std::vector<ActivationSpec> c = make_catalog();
  return c;
}

}  // namespace

const std::vector<std::string>& activation_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& a : catalog()) out.push_back(a.name);
    return out;
  }();
  return names;
}

const ActivationSpec& get_activation(std::string_view name) {
  for (const auto& a : catalog()) {
    if (a.name == name) return a;
  }
  std::string msg = "unknown activation '" + std::string(name) + "'; available:";
  for (const auto& n : activation_names()) msg += " " + n;
  throw std::invalid_argument(msg);
}

}  // namespace fewbit
