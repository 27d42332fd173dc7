#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "refed/datagen.hpp"
#include "refed/errors.hpp"

namespace refed {

// Per-sample gradient norms recorded while the informative model trains:
// rows[uid][p-1] is the squared gradient norm in epoch p, p = 1..epochs.
struct GradNormTrace {
    std::unordered_map<std::uint64_t, std::vector<double>> rows;
    std::size_t epochs = 0;
};

enum class Weighting { early_emphasis, average, late_emphasis };

// The reversed-emphasis variant has two defensible readings: mirrored harmonic
// weights sum G^p/(s+1-p), or ranking by the early-emphasis score ascending.
enum class LateEmphasisMode { mirrored_weights, reversed_sort };

// early_emphasis: sum G^p / p; average: sum G^p; late_emphasis: mirrored
// harmonic weights.
double importance_score(std::span<const double> trace_row, Weighting weighting);

struct ScoredSample {
    Sample sample;
    double score = 0.0;
};

// Capacity-bounded retention set. Entries are stored sorted by uid so cache
// iteration order never depends on how the selection ranked them.
struct ReplayCache {
    std::size_t capacity = 0;
    std::vector<ScoredSample> entries;
};

// Keeps the `capacity` highest-scored samples; ties broken by ascending uid.
ReplayCache select_cache(std::vector<ScoredSample> scored, std::size_t capacity);

// Literal reversed-sort reading: keeps the lowest-scored samples instead.
ReplayCache select_cache_lowest(std::vector<ScoredSample> scored, std::size_t capacity);

// Cache entries followed by the new task samples; total bounded by M because
// the cache was sized to M - |new_task_samples|.
std::vector<Sample> merged_training_set(const ReplayCache& cache,
                                        std::vector<Sample> new_task_samples, std::size_t M);

}  // namespace refed
