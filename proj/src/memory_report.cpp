#include "fewbit/memory_report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fewbit/kernels.hpp"

namespace fewbit {

void ActivationProfile::validate() const {
  if (layers.empty()) throw std::invalid_argument("profile has no layers");
  for (const auto& l : layers) {
    if (l.elements_per_sample == 0) {
      throw std::invalid_argument("layer '" + l.name + "' has a zero element count");
    }
  }
  if (bytes_per_element == 0 || batch_size == 0) {
    throw std::invalid_argument("bytes per element and batch size must be positive");
  }
}

SavingsReport savings(const ActivationProfile& profile, int bits) {
  if (bits < 1 || bits > 8) throw std::invalid_argument("bits must be in [1, 8]");
  profile.validate();
  SavingsReport r;
  r.bits = bits;
  for (const auto& l : profile.layers) {
    LayerSavings s;
    s.name = l.name;
    s.elements = l.elements_per_sample * profile.batch_size;
    s.before_bytes = s.elements * profile.bytes_per_element;
    s.after_bytes = PackedIndexBuffer::payload_bytes(s.elements, bits);
    s.ratio = static_cast<double>(s.before_bytes) / static_cast<double>(s.after_bytes);
    r.total_before += s.before_bytes;
    r.total_after += s.after_bytes;
    r.layers.push_back(std::move(s));
  }
  r.ratio = static_cast<double>(r.total_before) / static_cast<double>(r.total_after);
  r.saving_percent =
      100.0 * (1.0 - static_cast<double>(r.total_after) / static_cast<double>(r.total_before));
  return r;
}

ActivationProfile parse_profile(std::string_view text) {
  ActivationProfile p;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string name;
    if (!(fields >> name)) continue;
    long long count = 0;
    std::string extra;
    if (!(fields >> count) || (fields >> extra) || count <= 0) {
      throw std::invalid_argument("profile line " + std::to_string(lineno) +
                                  ": expected '<layer> <positive element count>'");
    }
    p.layers.push_back({name, static_cast<std::size_t>(count)});
  }
  if (p.layers.empty()) throw std::invalid_argument("profile has no layers");
  return p;
}

ActivationProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_profile(buf.str());
}

ActivationProfile mlp_profile(const MlpConfig& config, std::size_t n_train) {
  ActivationProfile p;
  for (std::size_t l = 1; l + 1 < config.widths.size(); ++l) {
    p.layers.push_back({"act" + std::to_string(l), config.widths[l]});
  }
  p.batch_size = std::min(config.batch_size, n_train);
  return p;
}

std::string format_report_table(const SavingsReport& r) {
  std::string out;
  char buf[160];
  std::size_t name_w = 5;
  for (const auto& l : r.layers) name_w = std::max(name_w, l.name.size());
  const int nw = static_cast<int>(name_w);
  std::snprintf(buf, sizeof buf, "%-*s %14s %14s %14s %9s\n", nw, "layer", "elements",
                "before_bytes", "after_bytes", "ratio");
  out += buf;
  for (const auto& l : r.layers) {
    std::snprintf(buf, sizeof buf, "%-*s %14zu %14zu %14zu %9.3f\n", nw, l.name.c_str(),
                  l.elements, l.before_bytes, l.after_bytes, l.ratio);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-*s %14s %14zu %14zu %9.3f\n", nw, "total", "",
                r.total_before, r.total_after, r.ratio);
  out += buf;
  std::snprintf(buf, sizeof buf, "bits=%d saving=%.2f%%\n", r.bits, r.saving_percent);
  out += buf;
  return out;
}

std::string format_report_csv(const SavingsReport& r) {
  std::ostringstream o;
  o.precision(10);
  o << "layer,elements,before_bytes,after_bytes,ratio\n";
  for (const auto& l : r.layers) {
    o << l.name << ',' << l.elements << ',' << l.before_bytes << ',' << l.after_bytes << ','
      << l.ratio << '\n';
  }
  o << "total,," << r.total_before << ',' << r.total_after << ',' << r.ratio << '\n';
  return o.str();
}

}  // namespace fewbit
