#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "semlink/rng.hpp"

namespace semlink {

// Per-feature gradient magnitude for one task, length L.
struct SensitivityVector {
  std::vector<double> values;
  int task_id = 0;
};

// Weighted combination of the task sensitivities, length L.
struct ImportanceVector {
  std::vector<double> values;
  std::vector<double> task_weights;
};

enum class SelectionPolicy { kFir, kRandom, kSequential, kFull };

const char* policy_name(SelectionPolicy p);
SelectionPolicy parse_policy(const std::string& name);

// Ordered subset of the L complex features to transmit.
struct SelectionPattern {
  std::vector<int> indices;  // strictly increasing, in [0, L)
  SelectionPolicy policy = SelectionPolicy::kFull;

  int budget() const { return static_cast<int>(indices.size()); }
  // Interleaved re/im column indices into the 2L-wide real representation.
  std::vector<std::size_t> real_columns() const;
};

// s = sum_i lambda_i * sensitivity_i, elementwise.
ImportanceVector combine_importance(
    const std::vector<SensitivityVector>& sensitivities,
    const std::vector<double>& lambdas);

// Indices of the B largest entries (ties to the lower index), sorted.
SelectionPattern select_top_b(const ImportanceVector& s, int budget);
SelectionPattern select_random(int num_features, int budget, RngStream& rng);
SelectionPattern select_sequential(int num_features, int budget);
SelectionPattern select_full(int num_features);

// Gather f at the pattern indices.
std::vector<std::complex<double>> apply_selection(
    const std::vector<std::complex<double>>& f, const SelectionPattern& p);

// Zero-filled length-L vector with z written back at the pattern indices.
std::vector<std::complex<double>> scatter_received(
    const std::vector<std::complex<double>>& z, const SelectionPattern& p,
    int num_features);

}  // namespace semlink
