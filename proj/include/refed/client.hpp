#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "refed/nn.hpp"
#include "refed/replay.hpp"

namespace refed {

struct ClientConfig {
    double lambda = 0.5;      // information-balance factor, strictly in (0,1)
    double eta = 0.05;        // learning rate
    int pim_epochs = 10;      // s: passes over the scoring set
    int local_epochs = 5;     // E
    int batch_size = 32;      // B
    std::size_t memory = 0;   // M: per-client sample budget
    double prox_mu = 0.0;     // FedProx coefficient; 0 disables the proximal term
    Weighting weighting = Weighting::early_emphasis;
    LateEmphasisMode late_mode = LateEmphasisMode::mirrored_weights;
    // Rough curvature bound for the informative-model stability guard
    // eta * (q(lambda) + curvature_bound) < 2.
    double curvature_bound = 10.0;

    void validate() const;
};

struct ClientState {
    int client_id = 0;
    ParamVector local_model;
    ReplayCache cache;
    std::vector<Sample> current_local_set;
};

// q(lambda) = (1 - lambda) / (2 lambda); the pull strength toward the global
// model in the informative-model update.
double q_lambda(double lambda);

struct PimResult {
    ParamVector pim;
    GradNormTrace trace;
};

// Trains the personalized informative model from the global model on the
// previous local samples:
//   v <- v - eta * (batch mean gradient + q(lambda) * (v - global)).
// Each epoch records every sample's squared gradient norm at the parameter
// values current when its batch is visited.
PimResult pim_update(const ParamVector& global_model, const ModelSpec& spec,
                     std::span<const Sample> previous_local_set, const ClientConfig& cfg,
                     std::uint64_t seed);

// Scores the current local set from the trace and keeps the top
// M - next_task_size samples.
ReplayCache score_and_cache(const ClientState& state, const GradNormTrace& trace,
                            std::size_t next_task_size, const ClientConfig& cfg);

// E epochs of mini-batch SGD on mean cross-entropy; prox_mu > 0 adds
// prox_mu * (model - global_model) to every batch gradient.
ParamVector local_train(ParamVector model, std::span<const Sample> local_set,
                        const ParamVector& global_model, const ModelSpec& spec,
                        const ClientConfig& cfg, std::uint64_t seed);

struct RoundContext {
    std::uint64_t run_seed = 0;
    int task = 0;   // 0-based task index
    int round = 0;  // 1-based global round
};

// Re-Fed task-boundary step: informative-model update on the previous set,
// importance-based caching, then merge with the incoming task.
void process_task_boundary(ClientState& state, const ParamVector& global_model,
                           const ModelSpec& spec, std::vector<Sample> incoming_task,
                           const ClientConfig& cfg, std::uint64_t run_seed, int task);

// One client round: optional boundary processing, then local training from the
// received global model. Returns the model to upload.
ParamVector client_round(ClientState& state, const ParamVector& global_model,
                         const std::optional<std::vector<Sample>>& incoming_task,
                         const ModelSpec& spec, const ClientConfig& cfg, const RoundContext& ctx);

}  // namespace refed
