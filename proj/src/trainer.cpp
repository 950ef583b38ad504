#include "fewbit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <numeric>
#include <random>

#include "fewbit/kernels.hpp"

namespace fewbit {
namespace {

constexpr std::size_t kTeacherHidden = 16;
constexpr double kNoise = 0.01;

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// out (n x out) = in (n x k) * W^T + b, W is out x k.
void affine(std::span<const double> in, std::size_t n, std::size_t k,
            const std::vector<double>& w, const std::vector<double>& b, std::size_t out_dim,
            std::vector<double>& out) {
  out.assign(n * out_dim, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = &in[r * k];
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double* wr = &w[o * k];
      double acc = b[o];
      for (std::size_t c = 0; c < k; ++c) acc += wr[c] * x[c];
      out[r * out_dim + o] = acc;
    }
  }
}

}  // namespace

Dataset make_synthetic_dataset(std::uint64_t seed, std::size_t n_samples, std::size_t in_dim,
                               std::size_t out_dim) {
  if (n_samples == 0 || in_dim == 0 || out_dim == 0) {
    throw std::invalid_argument("dataset sizes must be positive");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> w1(kTeacherHidden * in_dim), b1(kTeacherHidden), w2(out_dim * kTeacherHidden),
      b2(out_dim);
  for (auto& v : w1) v = normal(rng) / std::sqrt(static_cast<double>(in_dim));
  for (auto& v : b1) v = 0.1 * normal(rng);
  for (auto& v : w2) v = normal(rng) / std::sqrt(static_cast<double>(kTeacherHidden));
  for (auto& v : b2) v = 0.1 * normal(rng);

  Dataset d;
  d.in_dim = in_dim;
  d.out_dim = out_dim;
  d.inputs.resize(n_samples * in_dim);
  for (auto& v : d.inputs) v = normal(rng);

  std::vector<double> hidden;
  affine(d.inputs, n_samples, in_dim, w1, b1, kTeacherHidden, hidden);
  for (auto& v : hidden) v = std::tanh(v);
  affine(hidden, n_samples, kTeacherHidden, w2, b2, out_dim, d.targets);
  for (auto& v : d.targets) v += kNoise * normal(rng);
  return d;
}

std::string mode_label(const BackwardMode& mode) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ExactBackward>) {
          return "exact";
        } else if constexpr (std::is_same_v<T, FewbitBackward>) {
          return "fewbit:" + std::to_string(m.table ? m.table->bits : 0);
        } else {
          return "actnn:" + std::to_string(m.bits);
        }
      },
      mode);
}

int stored_bits(const BackwardMode& mode) {
  if (const auto* f = std::get_if<FewbitBackward>(&mode)) return f->table->bits;
  if (const auto* a = std::get_if<ActnnBackward>(&mode)) return a->bits;
  return 32;
}

void MlpConfig::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("MLP needs at least 2 layer widths");
  for (auto w : widths) {
    if (w == 0) throw std::invalid_argument("layer widths must be >= 1");
  }
  get_activation(activation);
  if (const auto* f = std::get_if<FewbitBackward>(&backward)) {
    if (!f->table) throw std::invalid_argument("fewbit mode needs a table");
    if (f->table->activation != activation) {
      throw std::invalid_argument("table activation '" + f->table->activation +
                                  "' does not match '" + activation + "'");
    }
  }
  if (const auto* a = std::get_if<ActnnBackward>(&backward)) {
    if (a->bits < 1 || a->bits > 8 || a->group_size == 0) {
      throw std::invalid_argument("actnn mode needs 1 <= bits <= 8 and group size >= 1");
    }
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must be in [0, 1)");
  }
}

Mlp::Mlp(const std::vector<std::size_t>& widths, const ActivationSpec& act, std::uint64_t seed)
    : widths_(widths), act_(&act) {
  std::mt19937_64 rng(mix_seed(seed, 1));
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> w(widths_[l + 1] * widths_[l]);
    for (auto& v : w) v = u(rng);
    weights_.push_back(std::move(w));
    biases_.emplace_back(widths_[l + 1], 0.0);
  }
}

std::vector<double> Mlp::predict(std::span<const double> inputs, std::size_t n) const {
  std::vector<double> a(inputs.begin(), inputs.begin() + n * widths_.front());
  std::vector<double> z;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    affine(a, n, widths_[l], weights_[l], biases_[l], widths_[l + 1], z);
    if (l + 1 < num_layers()) {
      for (auto& v : z) v = act_->f(v);
    }
    a.swap(z);
  }
  return a;
}

double Mlp::loss(std::span<const double> inputs, std::span<const double> targets,
                 std::size_t n) const {
  const auto pred = predict(inputs, n);
  double sum = 0.0;
  for (std::size_t e = 0; e < pred.size(); ++e) {
    const double d = pred[e] - targets[e];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

double Mlp::loss_and_gradients(std::span<const double> inputs, std::span<const double> targets,
                               std::size_t n, const BackwardMode& mode, std::uint64_t rng_seed,
                               Gradients& grads, std::size_t* saved_bytes) const {
  const std::size_t L = num_layers();
  // Inputs of every linear layer, and whatever each activation saved.
  std::vector<std::vector<double>> layer_in(L);
  std::vector<std::vector<double>> saved_exact(L);
  std::vector<PackedIndexBuffer> saved_fewbit(L);
  std::vector<ActnnChunkState> saved_actnn(L);
  std::size_t bytes = 0;

  layer_in[0].assign(inputs.begin(), inputs.begin() + n * widths_.front());
  std::vector<double> z;
  for (std::size_t l = 0; l < L; ++l) {
    affine(layer_in[l], n, widths_[l], weights_[l], biases_[l], widths_[l + 1], z);
    if (l + 1 == L) break;
    std::vector<double> a(z.size());
    if (const auto* f = std::get_if<FewbitBackward>(&mode)) {
      auto fwd = quantized_forward(z, *f->table);
      a = std::move(fwd.out);
      bytes += fwd.saved.bytes();
      saved_fewbit[l] = std::move(fwd.saved);
    } else {
      for (std::size_t e = 0; e < z.size(); ++e) a[e] = act_->f(z[e]);
      if (const auto* q = std::get_if<ActnnBackward>(&mode)) {
        saved_actnn[l] = actnn_quantize(z, q->bits, q->group_size, mix_seed(rng_seed, l));
        bytes += saved_actnn[l].packed.bytes();
      } else {
        // Accounted as 32-bit storage per element.
        bytes += 4 * z.size();
        saved_exact[l] = z;
      }
    }
    layer_in[l + 1] = std::move(a);
  }
  if (saved_bytes) *saved_bytes = bytes;

  const std::size_t out_dim = widths_.back();
  const double scale = 2.0 / static_cast<double>(n * out_dim);
  std::vector<double> delta(z.size());
  double loss = 0.0;
  for (std::size_t e = 0; e < z.size(); ++e) {
    const double d = z[e] - targets[e];
    loss += d * d;
    delta[e] = scale * d;
  }
  loss /= static_cast<double>(z.size());

  grads.weights.resize(L);
  grads.biases.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t k = widths_[l];
    const std::size_t o = widths_[l + 1];
    auto& gw = grads.weights[l];
    auto& gb = grads.biases[l];
    gw.assign(o * k, 0.0);
    gb.assign(o, 0.0);
    const auto& x = layer_in[l];
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < o; ++j) {
        const double d = delta[r * o + j];
        gb[j] += d;
        double* gwr = &gw[j * k];
        const double* xr = &x[r * k];
        for (std::size_t c = 0; c < k; ++c) gwr[c] += d * xr[c];
      }
    }
    if (l == 0) break;

    // Gradient w.r.t. this layer's input, i.e. the previous activation output.
    std::vector<double> up(n * k, 0.0);
    const auto& w = weights_[l];
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < o; ++j) {
        const double d = delta[r * o + j];
        const double* wr = &w[j * k];
        double* ur = &up[r * k];
        for (std::size_t c = 0; c < k; ++c) ur[c] += d * wr[c];
      }
    }
    // Through the activation: upstream * f'(z), with f' as the mode provides it.
    const std::size_t a = l - 1;
    if (const auto* f = std::get_if<FewbitBackward>(&mode)) {
      delta = quantized_backward(up, saved_fewbit[a], *f->table);
    } else if (std::holds_alternative<ActnnBackward>(mode)) {
      const auto zq = actnn_dequantize(saved_actnn[a]);
      delta.resize(up.size());
      for (std::size_t e = 0; e < up.size(); ++e) delta[e] = up[e] * act_->df(zq[e]);
    } else {
      delta.resize(up.size());
      for (std::size_t e = 0; e < up.size(); ++e) delta[e] = up[e] * act_->df(saved_exact[a][e]);
    }
  }
  return loss;
}

void Mlp::apply(const Gradients& grads, double learning_rate) {
  for (std::size_t l = 0; l < num_layers(); ++l) {
    for (std::size_t e = 0; e < weights_[l].size(); ++e) {
      weights_[l][e] -= learning_rate * grads.weights[l][e];
    }
    for (std::size_t e = 0; e < biases_[l].size(); ++e) {
      biases_[l][e] -= learning_rate * grads.biases[l][e];
    }
  }
}

TrainTrace train(const MlpConfig& config, const Dataset& data) {
  config.validate();
  if (data.in_dim != config.widths.front() || data.out_dim != config.widths.back()) {
    throw std::invalid_argument("dataset dimensions do not match the network widths");
  }
  const std::size_t total = data.size();
  const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction *
                                                         static_cast<double>(total)));
  const std::size_t n_train = total - n_val;
  if (n_train == 0) throw std::invalid_argument("no training samples");

  const auto& act = get_activation(config.activation);
  Mlp net(config.widths, act, config.seed);
  const std::size_t in = data.in_dim;
  const std::size_t out = data.out_dim;
  const std::size_t batch = std::min(config.batch_size, n_train);

  TrainTrace trace;
  trace.mode = mode_label(config.backward);
  trace.step_losses.reserve(config.steps);

  std::mt19937_64 order_rng(mix_seed(config.seed, 2));
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = n_train;

  std::vector<double> xb(batch * in);
  std::vector<double> yb(batch * out);
  Mlp::Gradients grads;
  for (std::size_t step = 0; step < config.steps; ++step) {
    for (std::size_t r = 0; r < batch; ++r) {
      if (cursor == n_train) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      const std::size_t s = order[cursor++];
      std::copy_n(&data.inputs[s * in], in, &xb[r * in]);
      std::copy_n(&data.targets[s * out], out, &yb[r * out]);
    }
    std::size_t bytes = 0;
    const double loss = net.loss_and_gradients(xb, yb, batch, config.backward,
                                               mix_seed(config.seed, 1000 + step), grads, &bytes);
    if (!std::isfinite(loss)) {
      throw TrainingDiverged(trace.mode + ": loss became non-finite at step " +
                             std::to_string(step));
    }
    trace.step_losses.push_back(loss);
    trace.activation_bytes = std::max(trace.activation_bytes, bytes);
    net.apply(grads, config.learning_rate);
  }

  trace.final_train_loss = net.loss(data.inputs, data.targets, n_train);
  if (!std::isfinite(trace.final_train_loss)) {
    throw TrainingDiverged(trace.mode + ": final training loss is non-finite");
  }
  if (n_val > 0) {
    trace.final_validation_loss =
        net.loss(std::span(data.inputs).subspan(n_train * in),
                 std::span(data.targets).subspan(n_train * out), n_val);
  }
  return trace;
}

ComparisonReport compare_modes(const MlpConfig& base, const std::vector<BackwardMode>& modes,
                               const Dataset& data) {
  std::vector<std::future<TrainTrace>> runs;
  for (const auto& m : modes) {
    MlpConfig c = base;
    c.backward = m;
    c.validate();
    runs.push_back(std::async(std::launch::async, [c, &data] { return train(c, data); }));
  }
  ComparisonReport report;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    ModeComparison row{runs[i].get(), stored_bits(modes[i]), 0.0, 0.0};
    row.compression_ratio = 32.0 / row.bits_per_element;
    report.rows.push_back(std::move(row));
  }
  // Savings relative to the 32-bit footprint of the same network and batch.
  std::size_t elements = 0;
  for (std::size_t l = 1; l + 1 < base.widths.size(); ++l) elements += base.widths[l];
  const std::size_t n_train =
      data.size() - static_cast<std::size_t>(std::floor(base.validation_fraction *
                                                        static_cast<double>(data.size())));
  const double full = 4.0 * static_cast<double>(elements * std::min(base.batch_size, n_train));
  for (auto& row : report.rows) {
    row.savings_percent =
        full > 0 ? 100.0 * (1.0 - static_cast<double>(row.trace.activation_bytes) / full) : 0.0;
  }
  return report;
}

void write_trace_csv(std::ostream& out, std::span<const TrainTrace> traces) {
  out << "step,mode,loss,activation_bytes\n" << std::setprecision(17);
  for (const auto& t : traces) {
    for (std::size_t s = 0; s < t.step_losses.size(); ++s) {
      out << s << ',' << t.mode << ',' << t.step_losses[s] << ',' << t.activation_bytes << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const ComparisonReport& report) {
  out << "mode,final_train_loss,final_validation_loss,activation_bytes,bits_per_element,"
         "compression_ratio,savings_percent\n"
      << std::setprecision(10);
  for (const auto& r : report.rows) {
    out << r.trace.mode << ',' << r.trace.final_train_loss << ','
        << r.trace.final_validation_loss << ',' << r.trace.activation_bytes << ','
        << r.bits_per_element << ',' << r.compression_ratio << ',' << r.savings_percent << '\n';
  }
}

}  // namespace fewbit
