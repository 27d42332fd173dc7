#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "refed/datagen.hpp"
#include "refed/nn.hpp"

namespace refed {

enum class AggregationRule { uniform_mean, sample_weighted };
enum class TaskWeighting { equal, by_size };

struct RoundRecord {
    int round = 0;  // 1-based global communication round
    int task = 0;   // 1-based task stage
    std::vector<int> selected;
    std::vector<double> acc_per_task;
    double acc_mean = 0.0;
};

// ceil(ratio * K) distinct ids, uniform without replacement, sorted ascending;
// deterministic in (seed, round).
std::vector<int> sample_clients(int K, double ratio, std::uint64_t seed, int round);

struct ClientUpdate {
    int client_id = 0;
    ParamVector model;
    std::size_t num_samples = 0;
};

// Coordinate-wise mean of the uploads. Updates are re-sorted by client id
// before summation so the result is bit-identical under input permutation.
ParamVector aggregate(std::vector<ClientUpdate> updates, AggregationRule rule);

struct EvalResult {
    std::vector<double> per_task;
    double mean = 0.0;
};

// Argmax accuracy per test set (ties resolve to the lowest class index) and
// their mean over the tasks seen so far.
EvalResult evaluate_global(const ParamVector& model, const ModelSpec& spec,
                           std::span<const std::vector<Sample>> test_sets,
                           TaskWeighting weighting = TaskWeighting::equal);

}  // namespace refed
