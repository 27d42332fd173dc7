#include "refed/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "refed/kernels.hpp"
#include "refed/rng.hpp"

namespace refed {

namespace {

void check_params(const ParamVector& params, const ModelSpec& spec, const char* where) {
    if (params.spec_fingerprint != spec.fingerprint() ||
        params.values.size() != spec.param_count()) {
        throw std::invalid_argument(std::string(where) + ": params do not match the model spec");
    }
}

void check_batch(const Batch& batch, const ModelSpec& spec, const char* where) {
    if (batch.features.empty() || batch.features.size() != batch.labels.size()) {
        throw std::invalid_argument(std::string(where) + ": batch must be nonempty with matched "
                                                         "features/labels");
    }
    for (const auto& f : batch.features) {
        if (f.size() != static_cast<std::size_t>(spec.input_dim)) {
            throw std::invalid_argument(std::string(where) + ": feature dimension mismatch");
        }
    }
    for (int y : batch.labels) {
        if (y < 0 || y >= spec.num_classes) {
            throw std::invalid_argument(std::string(where) + ": label out of range");
        }
    }
}

// Stable softmax into p; returns the sample loss  log(sum exp(z - m)) + m - z[y].
double softmax_loss(const std::vector<double>& z, int label, std::vector<double>& p) {
    const std::size_t n = z.size();
    double m = z[0];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::exp(z[i] - m);
        sum += p[i];
    }
    for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
    return std::log(sum) + m - z[label];
}

inline double act_apply(Activation a, double z) {
    return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

inline double act_deriv(Activation a, double z, double out) {
    return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - out * out;
}

}  // namespace

std::size_t ModelSpec::param_count() const {
    const std::size_t in = static_cast<std::size_t>(input_dim);
    const std::size_t h = static_cast<std::size_t>(hidden_dim);
    const std::size_t c = static_cast<std::size_t>(num_classes);
    if (h == 0) return c * in + c;
    return h * in + h + c * h + c;
}

std::uint64_t ModelSpec::fingerprint() const {
    std::uint64_t h = derive_seed(0x5eedULL, "model-spec", static_cast<std::uint64_t>(input_dim),
                                  static_cast<std::uint64_t>(hidden_dim),
                                  static_cast<std::uint64_t>(num_classes));
    return h ^ (activation == Activation::relu ? 0x1ULL : 0x2ULL);
}

void ModelSpec::validate() const {
    if (input_dim < 1) throw ConfigError("ModelSpec: input_dim must be >= 1");
    if (hidden_dim < 0) throw ConfigError("ModelSpec: hidden_dim must be >= 0");
    if (num_classes < 2) throw ConfigError("ModelSpec: num_classes must be >= 2");
}

ParamSlices param_slices(const ModelSpec& spec) {
    const std::size_t in = static_cast<std::size_t>(spec.input_dim);
    const std::size_t h = static_cast<std::size_t>(spec.hidden_dim);
    const std::size_t c = static_cast<std::size_t>(spec.num_classes);
    ParamSlices s{};
    if (h == 0) {
        s.has_hidden = false;
        s.w2 = 0;
        s.w2_len = c * in;
        s.b2 = s.w2_len;
        s.b2_len = c;
    } else {
        s.has_hidden = true;
        s.w1 = 0;
        s.w1_len = h * in;
        s.b1 = s.w1_len;
        s.b1_len = h;
        s.w2 = s.b1 + s.b1_len;
        s.w2_len = c * h;
        s.b2 = s.w2 + s.w2_len;
        s.b2_len = c;
    }
    return s;
}

ParamVector init_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamVector out;
    out.values.assign(spec.param_count(), 0.0);
    out.spec_fingerprint = spec.fingerprint();
    Rng rng(derive_seed(seed, "init-model", spec.fingerprint()));
    const ParamSlices s = param_slices(spec);
    auto fill_xavier = [&rng, &out](std::size_t off, std::size_t len, int fan_in, int fan_out) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t i = 0; i < len; ++i) {
            out.values[off + i] = rng.uniform(-bound, bound);
        }
    };
    if (s.has_hidden) {
        fill_xavier(s.w1, s.w1_len, spec.input_dim, spec.hidden_dim);
        fill_xavier(s.w2, s.w2_len, spec.hidden_dim, spec.num_classes);
    } else {
        fill_xavier(s.w2, s.w2_len, spec.input_dim, spec.num_classes);
    }
    return out;
}

GradScratch::GradScratch(const ModelSpec& spec)
    : z1(static_cast<std::size_t>(spec.hidden_dim)),
      a1(static_cast<std::size_t>(spec.hidden_dim)),
      z2(static_cast<std::size_t>(spec.num_classes)),
      p(static_cast<std::size_t>(spec.num_classes)),
      dz1(static_cast<std::size_t>(spec.hidden_dim)),
      dz2(static_cast<std::size_t>(spec.num_classes)) {}

namespace detail {

double sample_forward(const ParamVector& params, const ModelSpec& spec, const double* x,
                      int label, GradScratch& s) {
    const ParamSlices sl = param_slices(spec);
    const double* pv = params.values.data();
    const std::size_t in = static_cast<std::size_t>(spec.input_dim);
    const std::size_t h = static_cast<std::size_t>(spec.hidden_dim);
    const std::size_t c = static_cast<std::size_t>(spec.num_classes);
    if (sl.has_hidden) {
        kernels::matvec(pv + sl.w1, x, s.z1.data(), h, in);
        for (std::size_t i = 0; i < h; ++i) {
            s.z1[i] += pv[sl.b1 + i];
            s.a1[i] = act_apply(spec.activation, s.z1[i]);
        }
        kernels::matvec(pv + sl.w2, s.a1.data(), s.z2.data(), c, h);
    } else {
        kernels::matvec(pv + sl.w2, x, s.z2.data(), c, in);
    }
    for (std::size_t i = 0; i < c; ++i) s.z2[i] += pv[sl.b2 + i];
    return softmax_loss(s.z2, label, s.p);
}

double accumulate_sample_grad(const ParamVector& params, const ModelSpec& spec, const double* x,
                              int label, double weight, std::span<double> grad_out,
                              GradScratch& s) {
    const double loss = sample_forward(params, spec, x, label, s);
    const ParamSlices sl = param_slices(spec);
    const double* pv = params.values.data();
    double* g = grad_out.data();
    const std::size_t in = static_cast<std::size_t>(spec.input_dim);
    const std::size_t h = static_cast<std::size_t>(spec.hidden_dim);
    const std::size_t c = static_cast<std::size_t>(spec.num_classes);

    for (std::size_t i = 0; i < c; ++i) s.dz2[i] = s.p[i];
    s.dz2[label] -= 1.0;

    if (sl.has_hidden) {
        kernels::ger(weight, s.dz2.data(), s.a1.data(), g + sl.w2, c, h);
        kernels::axpy(weight, s.dz2.data(), g + sl.b2, c);
        kernels::matvec_t(pv + sl.w2, s.dz2.data(), s.dz1.data(), c, h);
        for (std::size_t i = 0; i < h; ++i) {
            s.dz1[i] *= act_deriv(spec.activation, s.z1[i], s.a1[i]);
        }
        kernels::ger(weight, s.dz1.data(), x, g + sl.w1, h, in);
        kernels::axpy(weight, s.dz1.data(), g + sl.b1, h);
    } else {
        kernels::ger(weight, s.dz2.data(), x, g + sl.w2, c, in);
        kernels::axpy(weight, s.dz2.data(), g + sl.b2, c);
    }
    return loss;
}

double sample_grad_sq_norm(const ParamVector& params, const ModelSpec& spec, const double* x,
                           int label, GradScratch& s) {
    sample_forward(params, spec, x, label, s);
    const ParamSlices sl = param_slices(spec);
    const double* pv = params.values.data();
    const std::size_t in = static_cast<std::size_t>(spec.input_dim);
    const std::size_t h = static_cast<std::size_t>(spec.hidden_dim);
    const std::size_t c = static_cast<std::size_t>(spec.num_classes);

    for (std::size_t i = 0; i < c; ++i) s.dz2[i] = s.p[i];
    s.dz2[label] -= 1.0;
    const double dz2_sq = kernels::sq_norm(s.dz2.data(), c);

    if (!sl.has_hidden) {
        return dz2_sq * (1.0 + kernels::sq_norm(x, in));
    }
    kernels::matvec_t(pv + sl.w2, s.dz2.data(), s.dz1.data(), c, h);
    for (std::size_t i = 0; i < h; ++i) {
        s.dz1[i] *= act_deriv(spec.activation, s.z1[i], s.a1[i]);
    }
    const double dz1_sq = kernels::sq_norm(s.dz1.data(), h);
    return dz2_sq * (1.0 + kernels::sq_norm(s.a1.data(), h)) +
           dz1_sq * (1.0 + kernels::sq_norm(x, in));
}

}  // namespace detail

std::vector<double> forward(const ParamVector& params, const ModelSpec& spec,
                            std::span<const double> features) {
    spec.validate();
    check_params(params, spec, "forward");
    if (features.size() != static_cast<std::size_t>(spec.input_dim)) {
        throw std::invalid_argument("forward: feature dimension mismatch");
    }
    GradScratch s(spec);
    detail::sample_forward(params, spec, features.data(), 0, s);
    return s.p;
}

LossGrad loss_grad(const ParamVector& params, const ModelSpec& spec, const Batch& batch) {
    spec.validate();
    check_params(params, spec, "loss_grad");
    check_batch(batch, spec, "loss_grad");
    LossGrad out;
    out.grad.values.assign(params.values.size(), 0.0);
    out.grad.spec_fingerprint = params.spec_fingerprint;
    GradScratch s(spec);
    const double w = 1.0 / static_cast<double>(batch.features.size());
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < batch.features.size(); ++i) {
        loss_sum += detail::accumulate_sample_grad(params, spec, batch.features[i].data(),
                                                   batch.labels[i], w, out.grad.values, s);
    }
    out.loss = loss_sum * w;
    return out;
}

double per_sample_grad_norm(const ParamVector& params, const ModelSpec& spec,
                            std::span<const double> features, int label) {
    spec.validate();
    check_params(params, spec, "per_sample_grad_norm");
    if (features.size() != static_cast<std::size_t>(spec.input_dim)) {
        throw std::invalid_argument("per_sample_grad_norm: feature dimension mismatch");
    }
    if (label < 0 || label >= spec.num_classes) {
        throw std::invalid_argument("per_sample_grad_norm: label out of range");
    }
    GradScratch s(spec);
    return detail::sample_grad_sq_norm(params, spec, features.data(), label, s);
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double eta) {
    if (params.values.size() != grad.values.size()) {
        throw std::invalid_argument("sgd_step: params/grad length mismatch");
    }
    if (!(eta > 0.0)) {
        throw std::invalid_argument("sgd_step: eta must be > 0");
    }
    ParamVector out = params;
    kernels::axpy(-eta, grad.values.data(), out.values.data(), out.values.size());
    return out;
}

ParamVector finite_diff_grad(const ParamVector& params, const ModelSpec& spec, const Batch& batch,
                             double eps) {
    spec.validate();
    check_params(params, spec, "finite_diff_grad");
    check_batch(batch, spec, "finite_diff_grad");
    if (!(eps >= 1e-8 && eps <= 1e-3)) {
        throw std::invalid_argument("finite_diff_grad: eps must lie in [1e-8, 1e-3]");
    }
    GradScratch s(spec);
    ParamVector probe = params;
    auto batch_loss = [&]() {
        double sum = 0.0;
        for (std::size_t i = 0; i < batch.features.size(); ++i) {
            sum += detail::sample_forward(probe, spec, batch.features[i].data(), batch.labels[i],
                                          s);
        }
        return sum / static_cast<double>(batch.features.size());
    };
    ParamVector out;
    out.values.assign(params.values.size(), 0.0);
    out.spec_fingerprint = params.spec_fingerprint;
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        const double orig = probe.values[i];
        probe.values[i] = orig + eps;
        const double hi = batch_loss();
        probe.values[i] = orig - eps;
        const double lo = batch_loss();
        probe.values[i] = orig;
        out.values[i] = (hi - lo) / (2.0 * eps);
    }
    return out;
}

}  // namespace refed
