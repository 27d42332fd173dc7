#include "refed/client.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "refed/kernels.hpp"
#include "refed/rng.hpp"

namespace refed {

void ClientConfig::validate() const {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw ConfigError("ClientConfig: lambda must lie strictly in (0,1)");
    }
    if (!(eta > 0.0)) throw ConfigError("ClientConfig: eta must be > 0");
    if (pim_epochs < 1) throw ConfigError("ClientConfig: pim_epochs must be >= 1");
    if (local_epochs < 1) throw ConfigError("ClientConfig: local_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("ClientConfig: batch_size must be >= 1");
    if (memory < 1) throw ConfigError("ClientConfig: memory must be >= 1");
    if (prox_mu < 0.0) throw ConfigError("ClientConfig: prox_mu must be >= 0");
    if (curvature_bound < 0.0) throw ConfigError("ClientConfig: curvature_bound must be >= 0");
}

double q_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw std::invalid_argument("q_lambda: lambda must lie strictly in (0,1)");
    }
    return (1.0 - lambda) / (2.0 * lambda);
}

namespace {

void check_finite(const ParamVector& params, const char* what, int epoch) {
    for (double v : params.values) {
        if (!std::isfinite(v)) {
            throw DivergenceError(std::string(what) + " diverged at epoch " +
                                      std::to_string(epoch),
                                  epoch);
        }
    }
}

// Mini-batch index schedule for one epoch. Full-batch mode (B >= n) keeps the
// stored sample order and consumes no randomness.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    Rng& rng, bool shuffle) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle && batch_size < n) {
        rng.shuffle(order);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(start + batch_size, n);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

// Batch-mean data gradient accumulated into grad (zeroed first).
void batch_mean_grad(const ParamVector& params, const ModelSpec& spec,
                     std::span<const Sample> samples, std::span<const std::size_t> idx,
                     std::vector<double>& grad, GradScratch& scratch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const double w = 1.0 / static_cast<double>(idx.size());
    for (std::size_t i : idx) {
        detail::accumulate_sample_grad(params, spec, samples[i].features.data(),
                                       samples[i].label, w, grad, scratch);
    }
}

}  // namespace

PimResult pim_update(const ParamVector& global_model, const ModelSpec& spec,
                     std::span<const Sample> previous_local_set, const ClientConfig& cfg,
                     std::uint64_t seed) {
    cfg.validate();
    if (previous_local_set.empty()) {
        throw std::invalid_argument("pim_update: previous local set must be nonempty");
    }
    const double q = q_lambda(cfg.lambda);
    if (cfg.eta * (q + cfg.curvature_bound) >= 2.0) {
        throw ConfigError("pim_update: unstable configuration, eta*(q+L) = " +
                          std::to_string(cfg.eta * (q + cfg.curvature_bound)) + " >= 2");
    }

    PimResult out;
    out.pim = global_model;
    out.trace.epochs = static_cast<std::size_t>(cfg.pim_epochs);
    for (const Sample& s : previous_local_set) {
        out.trace.rows[s.uid].reserve(out.trace.epochs);
    }

    const std::size_t n = previous_local_set.size();
    const std::size_t n_params = global_model.values.size();
    Rng rng(derive_seed(seed, "pim-epochs"));
    GradScratch scratch(spec);
    std::vector<double> grad(n_params);
    const double pull = cfg.eta * q;

    for (int epoch = 1; epoch <= cfg.pim_epochs; ++epoch) {
        const auto batches =
            epoch_batches(n, static_cast<std::size_t>(cfg.batch_size), rng, true);
        for (const auto& idx : batches) {
            // gradient norms are read off before the batch moves the model
            for (std::size_t i : idx) {
                const Sample& s = previous_local_set[i];
                out.trace.rows[s.uid].push_back(detail::sample_grad_sq_norm(
                    out.pim, spec, s.features.data(), s.label, scratch));
            }
            batch_mean_grad(out.pim, spec, previous_local_set, idx, grad, scratch);
            kernels::prox_sgd_step(out.pim.values.data(), grad.data(),
                                   global_model.values.data(), cfg.eta, pull, n_params);
        }
        check_finite(out.pim, "pim_update", epoch);
    }
    return out;
}

ReplayCache score_and_cache(const ClientState& state, const GradNormTrace& trace,
                            std::size_t next_task_size, const ClientConfig& cfg) {
    if (next_task_size > cfg.memory) {
        throw CapacityError("score_and_cache: next task of " + std::to_string(next_task_size) +
                            " samples exceeds memory budget M=" + std::to_string(cfg.memory));
    }
    if (trace.rows.size() != state.current_local_set.size()) {
        throw std::invalid_argument("score_and_cache: trace does not cover the local set");
    }
    const bool reversed = cfg.weighting == Weighting::late_emphasis &&
                          cfg.late_mode == LateEmphasisMode::reversed_sort;
    const Weighting scoring = reversed ? Weighting::early_emphasis : cfg.weighting;

    std::vector<ScoredSample> scored;
    scored.reserve(state.current_local_set.size());
    for (const Sample& s : state.current_local_set) {
        const auto it = trace.rows.find(s.uid);
        if (it == trace.rows.end()) {
            throw std::invalid_argument("score_and_cache: trace missing uid " +
                                        std::to_string(s.uid));
        }
        scored.push_back({s, importance_score(it->second, scoring)});
    }
    const std::size_t capacity = cfg.memory - next_task_size;
    return reversed ? select_cache_lowest(std::move(scored), capacity)
                    : select_cache(std::move(scored), capacity);
}

ParamVector local_train(ParamVector model, std::span<const Sample> local_set,
                        const ParamVector& global_model, const ModelSpec& spec,
                        const ClientConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (local_set.empty()) {
        throw std::invalid_argument("local_train: local set must be nonempty");
    }
    const std::size_t n = local_set.size();
    const std::size_t n_params = model.values.size();
    Rng rng(derive_seed(seed, "local-epochs"));
    GradScratch scratch(spec);
    std::vector<double> grad(n_params);

    for (int epoch = 1; epoch <= cfg.local_epochs; ++epoch) {
        const auto batches =
            epoch_batches(n, static_cast<std::size_t>(cfg.batch_size), rng, true);
        for (const auto& idx : batches) {
            batch_mean_grad(model, spec, local_set, idx, grad, scratch);
            if (cfg.prox_mu > 0.0) {
                kernels::prox_sgd_step(model.values.data(), grad.data(),
                                       global_model.values.data(), cfg.eta,
                                       cfg.eta * cfg.prox_mu, n_params);
            } else {
                kernels::axpy(-cfg.eta, grad.data(), model.values.data(), n_params);
            }
        }
        check_finite(model, "local_train", epoch);
    }
    return model;
}

void process_task_boundary(ClientState& state, const ParamVector& global_model,
                           const ModelSpec& spec, std::vector<Sample> incoming_task,
                           const ClientConfig& cfg, std::uint64_t run_seed, int task) {
    if (state.current_local_set.empty()) {
        // first data this client sees: nothing to score or cache
        if (incoming_task.size() > cfg.memory) {
            throw CapacityError("task boundary: incoming task of " +
                                std::to_string(incoming_task.size()) +
                                " samples exceeds memory budget M=" +
                                std::to_string(cfg.memory));
        }
        state.cache = ReplayCache{cfg.memory, {}};
        state.current_local_set = std::move(incoming_task);
        return;
    }
    const std::uint64_t pim_seed = derive_seed(run_seed, "pim", static_cast<std::uint64_t>(state.client_id),
                                               static_cast<std::uint64_t>(task));
    PimResult pim = pim_update(global_model, spec, state.current_local_set, cfg, pim_seed);
    state.cache = score_and_cache(state, pim.trace, incoming_task.size(), cfg);
    state.current_local_set =
        merged_training_set(state.cache, std::move(incoming_task), cfg.memory);
}

ParamVector client_round(ClientState& state, const ParamVector& global_model,
                         const std::optional<std::vector<Sample>>& incoming_task,
                         const ModelSpec& spec, const ClientConfig& cfg,
                         const RoundContext& ctx) {
    if (incoming_task.has_value()) {
        process_task_boundary(state, global_model, spec, *incoming_task, cfg, ctx.run_seed,
                              ctx.task);
    }
    state.local_model = global_model;
    if (!state.current_local_set.empty()) {
        const std::uint64_t train_seed =
            derive_seed(ctx.run_seed, "local-train", static_cast<std::uint64_t>(state.client_id),
                        static_cast<std::uint64_t>(ctx.round));
        state.local_model = local_train(std::move(state.local_model), state.current_local_set,
                                        global_model, spec, cfg, train_seed);
    }
    return state.local_model;
}

}  // namespace refed
