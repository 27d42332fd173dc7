#include "refed/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace refed {

double importance_score(std::span<const double> trace_row, Weighting weighting) {
    if (trace_row.empty()) {
        throw std::invalid_argument("importance_score: empty gradient-norm row");
    }
    const std::size_t s = trace_row.size();
    double score = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        const double g = trace_row[i];
        if (!std::isfinite(g) || g < 0.0) {
            throw std::invalid_argument("importance_score: gradient norms must be finite and >= 0");
        }
        switch (weighting) {
            case Weighting::early_emphasis:
                score += g / static_cast<double>(i + 1);
                break;
            case Weighting::average:
                score += g;
                break;
            case Weighting::late_emphasis:
                score += g / static_cast<double>(s - i);
                break;
        }
    }
    return score;
}

namespace {

ReplayCache select_impl(std::vector<ScoredSample> scored, std::size_t capacity, bool highest) {
    for (const ScoredSample& e : scored) {
        if (!std::isfinite(e.score) || e.score < 0.0) {
            throw std::invalid_argument("select_cache: scores must be finite and >= 0");
        }
    }
    std::sort(scored.begin(), scored.end(), [highest](const ScoredSample& a, const ScoredSample& b) {
        if (a.score != b.score) return highest ? a.score > b.score : a.score < b.score;
        return a.sample.uid < b.sample.uid;
    });
    if (scored.size() > capacity) {
        scored.resize(capacity);
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredSample& a, const ScoredSample& b) {
        return a.sample.uid < b.sample.uid;
    });
    ReplayCache cache;
    cache.capacity = capacity;
    cache.entries = std::move(scored);
    return cache;
}

}  // namespace

ReplayCache select_cache(std::vector<ScoredSample> scored, std::size_t capacity) {
    return select_impl(std::move(scored), capacity, true);
}

ReplayCache select_cache_lowest(std::vector<ScoredSample> scored, std::size_t capacity) {
    return select_impl(std::move(scored), capacity, false);
}

std::vector<Sample> merged_training_set(const ReplayCache& cache,
                                        std::vector<Sample> new_task_samples, std::size_t M) {
    if (new_task_samples.size() > M) {
        throw CapacityError("merged_training_set: new task of " +
                            std::to_string(new_task_samples.size()) +
                            " samples exceeds memory budget M=" + std::to_string(M));
    }
    if (cache.entries.size() > M - new_task_samples.size()) {
        throw CapacityError("merged_training_set: cache holds " +
                            std::to_string(cache.entries.size()) +
                            " samples but only " + std::to_string(M - new_task_samples.size()) +
                            " fit beside the new task");
    }
    std::vector<Sample> merged;
    merged.reserve(cache.entries.size() + new_task_samples.size());
    for (const ScoredSample& e : cache.entries) {
        merged.push_back(e.sample);
    }
    for (Sample& s : new_task_samples) {
        merged.push_back(std::move(s));
    }
    return merged;
}

}  // namespace refed
