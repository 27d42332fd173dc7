#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "refed/errors.hpp"

namespace refed {

enum class Activation { relu, tanh };

// Dense classifier: input -> optional hidden layer -> softmax. hidden_dim == 0
// degenerates to softmax regression.
struct ModelSpec {
    int input_dim = 0;
    int hidden_dim = 0;
    int num_classes = 0;
    Activation activation = Activation::relu;

    std::size_t param_count() const;
    std::uint64_t fingerprint() const;
    void validate() const;
};

// Flat parameter storage. Layout with a hidden layer:
//   W1 (hidden x input), b1 (hidden), W2 (classes x hidden), b2 (classes);
// without: W (classes x input), b (classes). Matrices row-major.
struct ParamVector {
    std::vector<double> values;
    std::uint64_t spec_fingerprint = 0;
};

struct ParamSlices {
    bool has_hidden;
    std::size_t w1, b1, w2, b2;              // offsets
    std::size_t w1_len, b1_len, w2_len, b2_len;
};
ParamSlices param_slices(const ModelSpec& spec);

struct Batch {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
};

// Xavier-uniform weights, zero biases; bit-deterministic in (spec, seed).
ParamVector init_model(const ModelSpec& spec, std::uint64_t seed);

// Softmax class probabilities for one input.
std::vector<double> forward(const ParamVector& params, const ModelSpec& spec,
                            std::span<const double> features);

struct LossGrad {
    double loss;
    ParamVector grad;
};

// Mean cross-entropy over the batch and its gradient.
LossGrad loss_grad(const ParamVector& params, const ModelSpec& spec, const Batch& batch);

// Squared L2 norm of the single-sample loss gradient over all parameters.
double per_sample_grad_norm(const ParamVector& params, const ModelSpec& spec,
                            std::span<const double> features, int label);

// out[i] = params[i] - eta * grad[i]
ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double eta);

// Central-difference gradient of the batch mean loss; eps in [1e-8, 1e-3].
// Touches only the loss path, never the analytic backward pass.
ParamVector finite_diff_grad(const ParamVector& params, const ModelSpec& spec, const Batch& batch,
                             double eps);

// Reusable buffers for the per-sample hot loops (one per thread/context).
class GradScratch {
public:
    explicit GradScratch(const ModelSpec& spec);
    std::vector<double> z1, a1, z2, p, dz1, dz2;
};

namespace detail {
// Cross-entropy loss of one sample; fills scratch activations.
double sample_forward(const ParamVector& params, const ModelSpec& spec, const double* x,
                      int label, GradScratch& s);
// grad_out += weight * dLoss/dparams for one sample. Returns the sample loss.
double accumulate_sample_grad(const ParamVector& params, const ModelSpec& spec, const double* x,
                              int label, double weight, std::span<double> grad_out,
                              GradScratch& s);
// Squared gradient norm via the factored form ||u v^T||_F^2 = ||u||^2 ||v||^2.
double sample_grad_sq_norm(const ParamVector& params, const ModelSpec& spec, const double* x,
                           int label, GradScratch& s);
}  // namespace detail

}  // namespace refed
