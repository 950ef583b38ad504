// fewbit: build and inspect few-bit activation-derivative tables, run the
// toy training comparison, and compute activation-memory savings.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "fewbit/activations.hpp"
#include "fewbit/kernels.hpp"
#include "fewbit/memory_report.hpp"
#include "fewbit/qtable.hpp"
#include "fewbit/reproduction.hpp"
#include "fewbit/simd.hpp"
#include "fewbit/trainer.hpp"

namespace fs = std::filesystem;
using namespace fewbit;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const ActivationSpec& activation_or_usage(const std::string& name) {
  try {
    return get_activation(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      const long long v = std::stoll(tok);
      if (v <= 0) throw std::invalid_argument("");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("bad --widths entry '" + tok + "'");
    }
  }
  return out;
}

struct TableFlags {
  std::string weight = "uniform";
  std::vector<double> range{-10.0, 10.0};
  std::size_t grid_n = 4000;
  std::size_t refine_steps = 200;
  double learning_rate = 1e-3;
  bool symmetry = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--weight", weight, "Weight function")
        ->check(CLI::IsMember({"uniform", "gaussian"}));
    cmd->add_option("--range", range, "Weight support A B")->expected(2);
    cmd->add_option("--grid-n", grid_n, "Grid panels")->check(CLI::Range(2, 1 << 24));
    cmd->add_option("--refine-steps", refine_steps, "Gradient refinement steps");
    cmd->add_option("--refine-lr", learning_rate, "Refinement learning rate")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--symmetry", symmetry, "Quantize |x| only (even derivatives)");
  }

  WeightSpec weight_spec() const {
    WeightSpec w{weight_kind_from_string(weight), range[0], range[1]};
    try {
      w.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return w;
  }

  TableBuildOptions options() const {
    return {grid_n, refine_steps, learning_rate, symmetry};
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void print_table(std::ostream& o, const QuantizationTable& t) {
  o << "activation        " << t.activation << "\n"
    << "bits              " << t.bits << "\n"
    << "num_levels        " << t.num_levels() << "\n"
    << "exploit_symmetry  " << (t.exploit_symmetry ? "true" : "false") << "\n"
    << "weight            " << to_string(t.weight.kind) << " [" << t.weight.a << ", "
    << t.weight.b << "]\n"
    << "achieved_error    " << fmt("%.10g", t.achieved_error) << "\n"
    << "grid_n            " << t.grid_n << "\n"
    << "refine_steps      " << t.refine_steps << "\n"
    << "segments:\n";
  const char* key = t.exploit_symmetry ? "|x|" : "x";
  for (std::size_t i = 0; i < t.num_levels(); ++i) {
    const std::string lo = i == 0 ? (t.exploit_symmetry ? "0" : "-inf")
                                  : fmt("%.9g", t.boundaries[i - 1]);
    const std::string hi = i + 1 == t.num_levels() ? "+inf" : fmt("%.9g", t.boundaries[i]);
    o << "  " << i << ": " << key << " in [" << lo << ", " << hi << ")  level "
      << fmt("%.12g", t.levels[i]) << "\n";
  }
}

BackwardMode parse_mode(const std::string& spec, const std::string& activation,
                        const std::string& table_path, std::size_t group_size) {
  if (spec == "exact") return ExactBackward{};
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  int bits = 0;
  if (colon != std::string::npos) {
    try {
      bits = std::stoi(spec.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("bad bit width in mode '" + spec + "'");
    }
  }
  if (kind == "fewbit") {
    std::shared_ptr<const QuantizationTable> table;
    if (!table_path.empty()) {
      table = std::make_shared<QuantizationTable>(load_table(table_path));
      if (bits != 0 && table->bits != bits) {
        throw UsageError("mode '" + spec + "' does not match the table's " +
                         std::to_string(table->bits) + " bits");
      }
      if (table->activation != activation) {
        throw UsageError("table is for '" + table->activation + "' but --activation is '" +
                         activation + "'");
      }
    } else {
      if (bits < 1 || bits > 8) throw UsageError("fewbit mode needs fewbit:B with 1 <= B <= 8");
      const auto& act = activation_or_usage(activation);
      TableBuildOptions opt;
      opt.exploit_symmetry = act.even_derivative;
      table = std::make_shared<QuantizationTable>(
          build_table(act, WeightSpec::uniform(-10.0, 10.0), bits, opt));
    }
    return FewbitBackward{table};
  }
  if (kind == "actnn") {
    if (bits < 1 || bits > 8) throw UsageError("actnn mode needs actnn:B with 1 <= B <= 8");
    return ActnnBackward{bits, group_size};
  }
  throw UsageError("unknown backward mode '" + spec + "' (exact, fewbit:B, actnn:B)");
}

struct TrainFlags {
  std::string activation = "gelu";
  std::string widths = "8,64,64,1";
  std::uint64_t seed = 0;
  double lr = 0.05;
  std::size_t batch = 64;
  std::size_t steps = 2000;
  std::size_t samples = 2048;
  std::size_t group = 256;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--activation", activation, "Activation name");
    cmd->add_option("--widths", widths, "Comma-separated layer widths, input to output");
    cmd->add_option("--seed", seed, "Seed for data, init and batch order");
    cmd->add_option("--lr", lr, "SGD learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--batch", batch, "Mini-batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--steps", steps, "SGD steps");
    cmd->add_option("--samples", samples, "Synthetic dataset size")->check(CLI::PositiveNumber);
    cmd->add_option("--group-size", group, "ActNN chunk size")->check(CLI::PositiveNumber);
  }

  MlpConfig config() const {
    activation_or_usage(activation);
    MlpConfig c;
    c.widths = parse_widths(widths);
    c.activation = activation;
    c.seed = seed;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.steps = steps;
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }

  Dataset dataset(const MlpConfig& c) const {
    return make_synthetic_dataset(seed, samples, c.widths.front(), c.widths.back());
  }
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-bit activation-derivative tables and quantized backward tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fewbit 1.0");

  // build-table
  auto* build = app.add_subcommand("build-table", "Solve and write a quantization table");
  std::string b_activation;
  int b_bits = 0;
  std::string b_out;
  TableFlags b_flags;
  build->add_option("--activation", b_activation, "Activation name")->required();
  build->add_option("--bits", b_bits, "Bits per element")->required()->check(CLI::Range(1, 8));
  build->add_option("--out", b_out, "Output table path")->required();
  b_flags.add_to(build);

  // eval-table
  auto* eval = app.add_subcommand("eval-table", "Re-evaluate a table's error by quadrature");
  std::string e_table;
  eval->add_option("table", e_table, "Table path")->required();

  // show-table
  auto* show = app.add_subcommand("show-table", "Print a table");
  std::string s_table;
  show->add_option("table", s_table, "Table path")->required();

  // reproduce-table1
  auto* repro =
      app.add_subcommand("reproduce-table1", "Build every published configuration and compare");
  std::string r_out = "table1";
  std::size_t r_grid = 4000;
  std::size_t r_refine = 200;
  unsigned r_jobs = std::max(1u, std::thread::hardware_concurrency());
  repro->add_option("--out", r_out, "Output directory");
  repro->add_option("--grid-n", r_grid, "Grid panels")->check(CLI::Range(2, 1 << 24));
  repro->add_option("--refine-steps", r_refine, "Gradient refinement steps");
  repro->add_option("--jobs", r_jobs, "Parallel builds")->check(CLI::PositiveNumber);

  // train
  auto* trn = app.add_subcommand("train", "Train the toy MLP with one backward mode");
  TrainFlags t_flags;
  std::string t_backward = "exact";
  int t_bits = 0;
  std::string t_table;
  std::string t_out;
  t_flags.add_to(trn);
  trn->add_option("--backward", t_backward, "exact | fewbit | actnn")
      ->check(CLI::IsMember({"exact", "fewbit", "actnn"}));
  trn->add_option("--bits", t_bits, "Bits for fewbit/actnn")->check(CLI::Range(1, 8));
  trn->add_option("--table", t_table, "Table file for fewbit mode");
  trn->add_option("--out", t_out, "Trace CSV path (stdout if omitted)");

  // compare
  auto* cmp = app.add_subcommand("compare", "Train once per backward mode and compare");
  TrainFlags c_flags;
  std::string c_modes = "exact,fewbit:3";
  std::string c_out;
  std::string c_summary;
  c_flags.add_to(cmp);
  cmp->add_option("--modes", c_modes, "Comma-separated: exact, fewbit:B, actnn:B");
  cmp->add_option("--out", c_out, "Trace CSV path (stdout if omitted)");
  cmp->add_option("--summary", c_summary, "Summary CSV path");

  // memory
  auto* mem = app.add_subcommand("memory", "Activation storage savings for a layer profile");
  std::string m_profile;
  int m_bits = 0;
  std::size_t m_batch = 1;
  std::size_t m_bytes = 4;
  std::string m_csv;
  mem->add_option("--profile", m_profile, "Profile file: '<layer> <elements>' per line")
      ->required();
  mem->add_option("--bits", m_bits, "Bits per element")->required()->check(CLI::Range(1, 8));
  mem->add_option("--batch", m_batch, "Batch size")->check(CLI::PositiveNumber);
  mem->add_option("--bytes-per-element", m_bytes, "Unquantized bytes per element")
      ->check(CLI::PositiveNumber);
  mem->add_option("--csv", m_csv, "Also write the report as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*build) {
      const auto& act = activation_or_usage(b_activation);
      const auto w = b_flags.weight_spec();
      const auto opt = b_flags.options();
      if (opt.exploit_symmetry && !act.even_derivative) {
        throw UsageError("--symmetry needs an even derivative; " + act.name + " has none");
      }
      const auto res = build_table_detailed(act, w, b_bits, opt);
      save_table(res.table, b_out);
      std::cout << "activation=" << act.name << " bits=" << b_bits
                << " dp_error=" << fmt("%.10g", res.dp_error)
                << " refined_error=" << fmt("%.10g", res.refined_error) << " -> " << b_out
                << "\n";
      return 0;
    }
    if (*eval) {
      const auto t = load_table(e_table);
      const double again = table_error(t);
      std::cout << "stored_error=" << fmt("%.12g", t.achieved_error)
                << " reevaluated_error=" << fmt("%.12g", again)
                << " abs_diff=" << fmt("%.3g", std::abs(again - t.achieved_error)) << "\n";
      return 0;
    }
    if (*show) {
      print_table(std::cout, load_table(s_table));
      return 0;
    }
    if (*repro) {
      TableBuildOptions opt;
      opt.grid_n = r_grid;
      opt.refine_steps = r_refine;
      const auto rows = reproduce_published(opt, r_jobs);
      fs::create_directories(r_out);
      std::ostringstream csv;
      csv << "activation,bits,published,dp_error,achieved_error,reevaluated_error,"
             "relative_deviation,within_tolerance\n";
      std::cout << "activation  bits  published   dp_error    achieved    rel_dev   ok\n";
      bool all_ok = true;
      for (const auto& r : rows) {
        const fs::path file =
            fs::path(r_out) / (r.activation + "_" + std::to_string(r.bits) + "bit.table");
        save_table(r.table, file);
        csv << r.activation << ',' << r.bits << ',' << fmt("%.4f", r.published) << ','
            << fmt("%.10g", r.dp_error) << ',' << fmt("%.10g", r.achieved_error) << ','
            << fmt("%.10g", r.reevaluated_error) << ',' << fmt("%.6f", r.relative_deviation)
            << ',' << (r.within_tolerance ? "yes" : "no") << '\n';
        char line[160];
        std::snprintf(line, sizeof line, "%-10s %4d  %9.4f  %9.6f  %9.6f  %+8.4f  %s\n",
                      r.activation.c_str(), r.bits, r.published, r.dp_error, r.achieved_error,
                      r.relative_deviation, r.within_tolerance ? "yes" : "NO");
        std::cout << line;
        all_ok = all_ok && r.within_tolerance;
      }
      write_file(fs::path(r_out) / "summary.csv", csv.str());
      std::cout << rows.size() << " tables written to " << r_out << "\n";
      return all_ok ? 0 : 1;
    }
    if (*trn) {
      MlpConfig cfg = t_flags.config();
      std::string spec = t_backward;
      if (t_backward != "exact") {
        if (t_bits == 0 && t_table.empty()) throw UsageError("--bits or --table is required");
        spec += ":" + std::to_string(t_bits);
      }
      cfg.backward = parse_mode(spec, cfg.activation, t_table, t_flags.group);
      cfg.validate();
      const auto trace = train(cfg, t_flags.dataset(cfg));
      std::ostringstream csv;
      write_trace_csv(csv, std::span(&trace, 1));
      if (t_out.empty()) {
        std::cout << csv.str();
      } else {
        write_file(t_out, csv.str());
      }
      std::cerr << trace.mode << ": final_train_loss=" << fmt("%.6g", trace.final_train_loss)
                << " final_validation_loss=" << fmt("%.6g", trace.final_validation_loss)
                << " activation_bytes=" << trace.activation_bytes << "\n";
      return 0;
    }
    if (*cmp) {
      const MlpConfig cfg = c_flags.config();
      std::vector<BackwardMode> modes;
      std::stringstream in(c_modes);
      std::string tok;
      while (std::getline(in, tok, ',')) {
        modes.push_back(parse_mode(tok, cfg.activation, "", c_flags.group));
      }
      if (modes.empty()) throw UsageError("--modes is empty");
      const auto report = compare_modes(cfg, modes, c_flags.dataset(cfg));
      std::vector<TrainTrace> traces;
      for (const auto& r : report.rows) traces.push_back(r.trace);
      std::ostringstream csv;
      write_trace_csv(csv, traces);
      std::ostringstream summary;
      write_summary_csv(summary, report);
      if (c_out.empty()) {
        std::cout << csv.str();
      } else {
        write_file(c_out, csv.str());
      }
      if (!c_summary.empty()) write_file(c_summary, summary.str());
      std::cerr << summary.str();
      return 0;
    }
    if (*mem) {
      ActivationProfile p;
      try {
        p = load_profile(m_profile);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      p.batch_size = m_batch;
      p.bytes_per_element = m_bytes;
      const auto report = savings(p, m_bits);
      std::cout << format_report_table(report);
      if (!m_csv.empty()) write_file(m_csv, format_report_csv(report));
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
