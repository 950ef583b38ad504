#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fewbit/trainer.hpp"

namespace fewbit {

struct ActivationLayer {
  std::string name;
  std::size_t elements_per_sample = 0;
};

struct ActivationProfile {
  std::vector<ActivationLayer> layers;
  std::size_t bytes_per_element = 4;
  std::size_t batch_size = 1;

  void validate() const;
};

struct LayerSavings {
  std::string name;
  std::size_t elements = 0;  // per batch
  std::size_t before_bytes = 0;
  std::size_t after_bytes = 0;
  double ratio = 0.0;
};

struct SavingsReport {
  int bits = 0;
  std::vector<LayerSavings> layers;
  std::size_t total_before = 0;
  std::size_t total_after = 0;
  double ratio = 0.0;
  double saving_percent = 0.0;
};

// after = ceil(elements * batch * bits / 8) per layer.
SavingsReport savings(const ActivationProfile& profile, int bits);

// One "name element_count" pair per line; blank lines and # comments ignored.
ActivationProfile parse_profile(std::string_view text);
ActivationProfile load_profile(const std::filesystem::path& path);

// The hidden activation layers of an MLP at its training batch size.
ActivationProfile mlp_profile(const MlpConfig& config, std::size_t n_train);

std::string format_report_table(const SavingsReport& report);
std::string format_report_csv(const SavingsReport& report);

}  // namespace fewbit
