#include "refed/server.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "refed/kernels.hpp"
#include "refed/rng.hpp"

namespace refed {

std::vector<int> sample_clients(int K, double ratio, std::uint64_t seed, int round) {
    if (K < 1) throw std::invalid_argument("sample_clients: K must be >= 1");
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw std::invalid_argument("sample_clients: ratio must lie in (0,1]");
    }
    const int m = static_cast<int>(std::ceil(ratio * K));
    std::vector<int> ids(static_cast<std::size_t>(K));
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(derive_seed(seed, "client-selection", static_cast<std::uint64_t>(round)));
    // partial Fisher-Yates: the first m entries are a uniform sample
    for (int i = 0; i < m; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(K - i));
        std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
    }
    ids.resize(static_cast<std::size_t>(m));
    std::sort(ids.begin(), ids.end());
    return ids;
}

ParamVector aggregate(std::vector<ClientUpdate> updates, AggregationRule rule) {
    if (updates.empty()) {
        throw std::invalid_argument("aggregate: need at least one update");
    }
    const std::size_t n = updates.front().model.values.size();
    for (const ClientUpdate& u : updates) {
        if (u.model.values.size() != n) {
            throw std::invalid_argument("aggregate: model length mismatch");
        }
    }
    std::sort(updates.begin(), updates.end(),
              [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_id < b.client_id; });

    double weight_total = 0.0;
    if (rule == AggregationRule::sample_weighted) {
        for (const ClientUpdate& u : updates) {
            weight_total += static_cast<double>(u.num_samples);
        }
        if (weight_total == 0.0) {
            // all-empty clients carry no signal; fall back to the uniform rule
            rule = AggregationRule::uniform_mean;
        }
    }

    ParamVector out;
    out.values.assign(n, 0.0);
    out.spec_fingerprint = updates.front().model.spec_fingerprint;
    const double uniform_w = 1.0 / static_cast<double>(updates.size());
    for (const ClientUpdate& u : updates) {
        const double w = rule == AggregationRule::uniform_mean
                             ? uniform_w
                             : static_cast<double>(u.num_samples) / weight_total;
        kernels::axpy(w, u.model.values.data(), out.values.data(), n);
    }
    return out;
}

EvalResult evaluate_global(const ParamVector& model, const ModelSpec& spec,
                           std::span<const std::vector<Sample>> test_sets,
                           TaskWeighting weighting) {
    if (test_sets.empty()) {
        throw std::invalid_argument("evaluate_global: need at least one test set");
    }
    EvalResult result;
    GradScratch scratch(spec);
    std::size_t total_samples = 0;
    std::size_t total_correct = 0;
    for (const auto& test_set : test_sets) {
        if (test_set.empty()) {
            throw std::invalid_argument("evaluate_global: empty test set");
        }
        std::size_t correct = 0;
        for (const Sample& s : test_set) {
            detail::sample_forward(model, spec, s.features.data(), 0, scratch);
            int best = 0;
            for (int c = 1; c < spec.num_classes; ++c) {
                if (scratch.p[static_cast<std::size_t>(c)] >
                    scratch.p[static_cast<std::size_t>(best)]) {
                    best = c;
                }
            }
            if (best == s.label) ++correct;
        }
        result.per_task.push_back(static_cast<double>(correct) /
                                  static_cast<double>(test_set.size()));
        total_samples += test_set.size();
        total_correct += correct;
    }
    if (weighting == TaskWeighting::equal) {
        double sum = 0.0;
        for (double a : result.per_task) sum += a;
        result.mean = sum / static_cast<double>(result.per_task.size());
    } else {
        result.mean = static_cast<double>(total_correct) / static_cast<double>(total_samples);
    }
    return result;
}

}  // namespace refed
