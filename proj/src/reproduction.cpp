#include "fewbit/reproduction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace fewbit {
namespace {

constexpr PublishedError kPublished[] = {
    {"relu", 1, 0.0},
    {"gelu", 1, 0.1410},    {"gelu", 2, 0.0406},    {"gelu", 3, 0.0119},
    {"gelu", 4, 0.0031},    {"swish", 1, 0.2150},   {"swish", 2, 0.0479},
    {"swish", 3, 0.0170},   {"swish", 4, 0.0045},   {"sigmoid", 1, 0.0181},
    {"sigmoid", 2, 0.0038}, {"sigmoid", 3, 0.0009}, {"sigmoid", 4, 0.0002},
    {"tanh", 1, 0.1584},    {"tanh", 2, 0.0319},    {"tanh", 3, 0.0073},
    {"tanh", 4, 0.0017},    {"selu", 1, 0.2554},    {"selu", 2, 0.1010},
    {"selu", 3, 0.0184},    {"selu", 4, 0.0039},    {"softplus", 1, 0.2902},
    {"softplus", 2, 0.0541}, {"softplus", 3, 0.0121}, {"softplus", 4, 0.0029},
};

}  // namespace

std::span<const PublishedError> published_errors() { return kPublished; }

bool within_published_tolerance(double achieved, double published) {
  if (published == 0.0) return achieved == 0.0;
  return std::abs(achieved - published) <= std::max(0.05 * std::abs(published), 5e-4);
}

std::vector<ReproductionRow> reproduce_published(const TableBuildOptions& base, unsigned jobs) {
  const auto pub = published_errors();
  std::vector<ReproductionRow> rows(pub.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < pub.size(); i = next++) {
      const auto& act = get_activation(pub[i].activation);
      TableBuildOptions opt = base;
      opt.exploit_symmetry = act.even_derivative;
      auto build = build_table_detailed(act, WeightSpec::uniform(-10.0, 10.0), pub[i].bits, opt);
      ReproductionRow& r = rows[i];
      r.activation = act.name;
      r.bits = pub[i].bits;
      r.published = pub[i].value;
      r.dp_error = build.dp_error;
      r.achieved_error = build.table.achieved_error;
      r.reevaluated_error = table_error(build.table);
      r.relative_deviation =
          r.published != 0.0 ? (r.achieved_error - r.published) / r.published : r.achieved_error;
      r.within_tolerance = within_published_tolerance(r.achieved_error, r.published);
      r.table = std::move(build.table);
    }
  };
  auto worker = [&] {
    try {
      work();
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };
  jobs = std::max(1u, jobs);
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace fewbit
