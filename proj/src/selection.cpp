#include "semlink/selection.hpp"

#include <algorithm>
#include <numeric>

#include "semlink/errors.hpp"

namespace semlink {

const char* policy_name(SelectionPolicy p) {
  switch (p) {
    case SelectionPolicy::kFir: return "fir";
    case SelectionPolicy::kRandom: return "random";
    case SelectionPolicy::kSequential: return "sequential";
    case SelectionPolicy::kFull: return "full";
  }
  return "?";
}

SelectionPolicy parse_policy(const std::string& name) {
  if (name == "fir") return SelectionPolicy::kFir;
  if (name == "random") return SelectionPolicy::kRandom;
  if (name == "sequential") return SelectionPolicy::kSequential;
  if (name == "full") return SelectionPolicy::kFull;
  throw ConfigError("unknown selection method '" + name +
                    "' (expected fir, random, sequential or full)");
}

std::vector<std::size_t> SelectionPattern::real_columns() const {
  std::vector<std::size_t> cols;
  cols.reserve(indices.size() * 2);
  for (int i : indices) {
    cols.push_back(2 * static_cast<std::size_t>(i));
    cols.push_back(2 * static_cast<std::size_t>(i) + 1);
  }
  return cols;
}

ImportanceVector combine_importance(
    const std::vector<SensitivityVector>& sensitivities,
    const std::vector<double>& lambdas) {
  if (sensitivities.empty() || sensitivities.size() != lambdas.size()) {
    throw ContractError("combine_importance: need one weight per task (" +
                        std::to_string(sensitivities.size()) + " tasks, " +
                        std::to_string(lambdas.size()) + " weights)");
  }
  const std::size_t len = sensitivities[0].values.size();
  ImportanceVector s;
  s.values.assign(len, 0.0);
  s.task_weights = lambdas;
  for (std::size_t t = 0; t < sensitivities.size(); ++t) {
    if (sensitivities[t].values.size() != len) {
      throw ContractError("combine_importance: sensitivity length mismatch");
    }
    for (std::size_t i = 0; i < len; ++i) {
      s.values[i] += lambdas[t] * sensitivities[t].values[i];
    }
  }
  return s;
}

namespace {
void check_budget(int num_features, int budget, const char* op) {
  if (budget < 1 || budget > num_features) {
    throw ContractError(std::string(op) + ": budget " +
                        std::to_string(budget) + " out of range [1, " +
                        std::to_string(num_features) + "]");
  }
}
}  // namespace

SelectionPattern select_top_b(const ImportanceVector& s, int budget) {
  const int L = static_cast<int>(s.values.size());
  check_budget(L, budget, "select_top_b");
  std::vector<int> order(L);
  std::iota(order.begin(), order.end(), 0);
  // Descending by value; equal values keep the lower index first.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return s.values[a] > s.values[b];
  });
  SelectionPattern p;
  p.policy = SelectionPolicy::kFir;
  p.indices.assign(order.begin(), order.begin() + budget);
  std::sort(p.indices.begin(), p.indices.end());
  return p;
}

SelectionPattern select_random(int num_features, int budget, RngStream& rng) {
  check_budget(num_features, budget, "select_random");
  // Partial Fisher-Yates: uniform without replacement.
  std::vector<int> pool(num_features);
  std::iota(pool.begin(), pool.end(), 0);
  SelectionPattern p;
  p.policy = SelectionPolicy::kRandom;
  for (int i = 0; i < budget; ++i) {
    const std::int64_t j =
        rng.uniform_int(i, static_cast<std::int64_t>(num_features) - 1);
    std::swap(pool[i], pool[j]);
    p.indices.push_back(pool[i]);
  }
  std::sort(p.indices.begin(), p.indices.end());
  return p;
}

SelectionPattern select_sequential(int num_features, int budget) {
  check_budget(num_features, budget, "select_sequential");
  SelectionPattern p;
  p.policy = SelectionPolicy::kSequential;
  p.indices.resize(budget);
  std::iota(p.indices.begin(), p.indices.end(), 0);
  return p;
}

SelectionPattern select_full(int num_features) {
  SelectionPattern p = select_sequential(num_features, num_features);
  p.policy = SelectionPolicy::kFull;
  return p;
}

std::vector<std::complex<double>> apply_selection(
    const std::vector<std::complex<double>>& f, const SelectionPattern& p) {
  std::vector<std::complex<double>> out;
  out.reserve(p.indices.size());
  for (int i : p.indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= f.size()) {
      throw ContractError("apply_selection: index " + std::to_string(i) +
                          " out of range for length " +
                          std::to_string(f.size()));
    }
    out.push_back(f[i]);
  }
  return out;
}

std::vector<std::complex<double>> scatter_received(
    const std::vector<std::complex<double>>& z, const SelectionPattern& p,
    int num_features) {
  if (z.size() != p.indices.size()) {
    throw ContractError("scatter_received: " + std::to_string(z.size()) +
                        " values for a pattern of size " +
                        std::to_string(p.indices.size()));
  }
  std::vector<std::complex<double>> out(num_features, {0.0, 0.0});
  for (std::size_t j = 0; j < z.size(); ++j) {
    const int i = p.indices[j];
    if (i < 0 || i >= num_features) {
      throw ContractError("scatter_received: index " + std::to_string(i) +
                          " out of range for length " +
                          std::to_string(num_features));
    }
    out[i] = z[j];
  }
  return out;
}

}  // namespace semlink
