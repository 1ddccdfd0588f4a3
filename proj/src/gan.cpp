#include "fgan/gan.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fgan/hash.hpp"
#include "fgan/rng.hpp"

namespace fgan {

void Batch::validate() const {
    if (samples.empty()) throw std::invalid_argument("Batch: empty");
    const std::size_t d = samples.front().size();
    for (const auto& s : samples) {
        if (s.size() != d) throw std::invalid_argument("Batch: ragged sample dimensions");
    }
    if (labels && labels->size() != samples.size()) {
        throw std::invalid_argument("Batch: label count does not match sample count");
    }
}

void GanModel::validate() const {
    generator_spec.validate();
    discriminator_spec.validate();
    if (noise_dim == 0 || generator_spec.input_dim() != noise_dim) {
        throw std::invalid_argument("GanModel: generator input must equal noise_dim");
    }
    if (generator_spec.output_dim() != discriminator_spec.input_dim()) {
        throw std::invalid_argument(
            "GanModel: generator output dim must equal discriminator input dim");
    }
    if (discriminator_spec.output_dim() != 1 ||
        discriminator_spec.output_activation != OutputActivation::sigmoid) {
        throw std::invalid_argument(
            "GanModel: discriminator must have a single sigmoid output");
    }
    if (generator_params.size() != generator_spec.param_count() ||
        discriminator_params.size() != discriminator_spec.param_count()) {
        throw std::invalid_argument("GanModel: parameter vector length mismatch");
    }
}

GanModel make_gan(std::size_t feature_dim, std::size_t noise_dim,
                  std::uint64_t seed,
                  const std::vector<std::size_t>& disc_hidden,
                  const std::vector<std::size_t>& gen_hidden) {
    GanModel m;
    m.noise_dim = noise_dim;
    m.discriminator_spec.layer_sizes.push_back(feature_dim);
    for (std::size_t h : disc_hidden) m.discriminator_spec.layer_sizes.push_back(h);
    m.discriminator_spec.layer_sizes.push_back(1);
    m.discriminator_spec.hidden_activation = HiddenActivation::relu;
    m.discriminator_spec.output_activation = OutputActivation::sigmoid;

    m.generator_spec.layer_sizes.push_back(noise_dim);
    for (std::size_t h : gen_hidden) m.generator_spec.layer_sizes.push_back(h);
    m.generator_spec.layer_sizes.push_back(feature_dim);
    m.generator_spec.hidden_activation = HiddenActivation::tanh;
    m.generator_spec.output_activation = OutputActivation::identity;

    m.discriminator_params =
        init_params(m.discriminator_spec, derive_seed(seed, "disc-init"));
    m.generator_params = init_params(m.generator_spec, derive_seed(seed, "gen-init"));
    m.validate();
    return m;
}

std::uint64_t model_hash(const GanModel& model) {
    Hasher h;
    h.u64(spec_hash(model.generator_spec));
    h.u64(spec_hash(model.discriminator_spec));
    h.u64(model.noise_dim);
    for (double v : model.generator_params.values) h.f64(v);
    for (double v : model.discriminator_params.values) h.f64(v);
    return h.digest();
}

double discriminator_prob(const GanModel& model, std::span<const double> x) {
    return forward(model.discriminator_spec, model.discriminator_params, x)[0];
}

std::vector<double> generate_sample(const GanModel& model,
                                    std::span<const double> noise) {
    return forward(model.generator_spec, model.generator_params, noise);
}

namespace {

void check_batch_dim(const GanModel& model, const Batch& b, const char* which) {
    b.validate();
    if (b.dim() != model.feature_dim()) {
        throw std::invalid_argument(std::string(which) +
                                    " batch dimension does not match discriminator input");
    }
}

// Back-propagates dL/d(output activations) through one network. Adds the
// parameter gradient into grad (when non-null) and optionally reports
// dL/d(input). Throws on non-finite intermediates, naming the layer.
std::vector<double> backprop_through(const MlpSpec& spec, const ParamVector& params,
                                     const detail::ForwardTrace& tr,
                                     std::vector<double> d_act,
                                     ParamVector* grad, bool want_input_grad) {
    const std::size_t layers = spec.layer_count();
    std::vector<double> delta(spec.output_dim());

    // Output layer: activation derivative. Clamped sigmoid outputs have a
    // flat derivative, which keeps the analytic gradient consistent with the
    // clamped forward pass.
    for (std::size_t j = 0; j < delta.size(); ++j) {
        double z = tr.pre.back()[j];
        if (spec.output_activation == OutputActivation::sigmoid) {
            double s = 1.0 / (1.0 + std::exp(-z));
            double dz = (s < kProbClamp || s > 1.0 - kProbClamp) ? 0.0 : s * (1.0 - s);
            delta[j] = d_act[j] * dz;
        } else {
            delta[j] = d_act[j];
        }
    }

    std::vector<double> input_grad;
    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = spec.layer_sizes[l];
        const std::size_t out = spec.layer_sizes[l + 1];
        const std::size_t off = detail::layer_offset(spec, l);
        const double* w = params.values.data() + off;
        const std::vector<double>& a_prev = tr.act[l];

        for (double v : delta) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("backprop: non-finite gradient at layer " +
                                         std::to_string(l));
            }
        }
        for (double v : a_prev) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("backprop: non-finite activation at layer " +
                                         std::to_string(l));
            }
        }
        if (grad) {
            double* gw = grad->values.data() + off;
            double* gb = gw + out * in;
            for (std::size_t j = 0; j < out; ++j) {
                const double dj = delta[j];
                double* grow = gw + j * in;
                for (std::size_t k = 0; k < in; ++k) grow[k] += dj * a_prev[k];
                gb[j] += dj;
            }
        }

        const bool need_prev = l > 0 || want_input_grad;
        if (!need_prev) break;

        std::vector<double> prev(in, 0.0);
        for (std::size_t j = 0; j < out; ++j) {
            const double dj = delta[j];
            const double* row = w + j * in;
            for (std::size_t k = 0; k < in; ++k) prev[k] += row[k] * dj;
        }
        if (l > 0) {
            for (std::size_t k = 0; k < in; ++k) {
                prev[k] *= detail::hidden_derivative(spec.hidden_activation,
                                                     tr.pre[l - 1][k]);
            }
            delta = std::move(prev);
        } else {
            input_grad = std::move(prev);
        }
    }
    return input_grad;
}

}  // namespace

double value_function(const GanModel& model, const Batch& real_batch,
                      const Batch& fake_batch) {
    check_batch_dim(model, real_batch, "real");
    check_batch_dim(model, fake_batch, "fake");
    double real_term = 0.0;
    for (const auto& x : real_batch.samples) {
        real_term += std::log(discriminator_prob(model, x));
    }
    real_term /= static_cast<double>(real_batch.size());
    double fake_term = 0.0;
    for (const auto& x : fake_batch.samples) {
        fake_term += std::log(1.0 - discriminator_prob(model, x));
    }
    fake_term /= static_cast<double>(fake_batch.size());
    return real_term + fake_term;
}

double discriminator_loss(const GanModel& model, const Batch& real_batch,
                          const Batch& fake_batch) {
    return -value_function(model, real_batch, fake_batch);
}

double generator_loss(const GanModel& model, const Batch& fake_batch) {
    check_batch_dim(model, fake_batch, "fake");
    double total = 0.0;
    for (const auto& x : fake_batch.samples) {
        total += std::log(discriminator_prob(model, x));
    }
    return -total / static_cast<double>(fake_batch.size());
}

ParamVector discriminator_gradient(const MlpSpec& disc_spec,
                                   const ParamVector& disc_params,
                                   const Batch& real_batch,
                                   const Batch& fake_batch) {
    real_batch.validate();
    fake_batch.validate();
    ParamVector grad;
    grad.values.assign(disc_params.size(), 0.0);
    const double inv_r = 1.0 / static_cast<double>(real_batch.size());
    const double inv_f = 1.0 / static_cast<double>(fake_batch.size());
    for (const auto& x : real_batch.samples) {
        auto tr = detail::forward_trace(disc_spec, disc_params, x);
        const double d = tr.act.back()[0];
        backprop_through(disc_spec, disc_params, tr, {-inv_r / d}, &grad, false);
    }
    for (const auto& x : fake_batch.samples) {
        auto tr = detail::forward_trace(disc_spec, disc_params, x);
        const double d = tr.act.back()[0];
        backprop_through(disc_spec, disc_params, tr, {inv_f / (1.0 - d)}, &grad, false);
    }
    return grad;
}

ParamVector generator_gradient(const GanModel& model,
                               const std::vector<std::vector<double>>& noise_batch) {
    if (noise_batch.empty()) {
        throw std::invalid_argument("generator_gradient: empty noise batch");
    }
    ParamVector grad;
    grad.values.assign(model.generator_params.size(), 0.0);
    const double inv_m = 1.0 / static_cast<double>(noise_batch.size());
    for (const auto& z : noise_batch) {
        auto gen_tr =
            detail::forward_trace(model.generator_spec, model.generator_params, z);
        auto disc_tr = detail::forward_trace(model.discriminator_spec,
                                             model.discriminator_params,
                                             gen_tr.act.back());
        const double d = disc_tr.act.back()[0];
        // Only the input gradient of the discriminator is needed here.
        std::vector<double> dx =
            backprop_through(model.discriminator_spec, model.discriminator_params,
                             disc_tr, {-inv_m / d}, nullptr, true);
        backprop_through(model.generator_spec, model.generator_params, gen_tr,
                         std::move(dx), &grad, false);
    }
    return grad;
}

TrainResult train_round(const GanModel& model, const Batch& genuine_pool,
                        const TrainHyper& hyper, const Batch* labeled_malicious) {
    model.validate();
    if (hyper.steps < 1) {
        throw std::invalid_argument("train_round: steps must be >= 1");
    }
    if (hyper.batch_size < 1) {
        throw std::invalid_argument("train_round: batch_size must be >= 1");
    }
    if (genuine_pool.empty()) {
        throw std::runtime_error(
            "train_round: node has no genuine samples to train on");
    }
    genuine_pool.validate();
    if (genuine_pool.dim() != model.feature_dim()) {
        throw std::invalid_argument("train_round: genuine pool dimension mismatch");
    }
    const bool use_malicious = labeled_malicious && !labeled_malicious->empty();
    if (use_malicious) {
        labeled_malicious->validate();
        if (labeled_malicious->dim() != model.feature_dim()) {
            throw std::invalid_argument(
                "train_round: malicious pool dimension mismatch");
        }
    }

    Rng rng(hyper.rng_seed);
    TrainResult res;
    res.model = model;
    res.trace.reserve(hyper.steps);
    const std::size_t b = hyper.batch_size;

    for (std::size_t step = 0; step < hyper.steps; ++step) {
        Batch real_mb;
        real_mb.samples.reserve(b);
        for (std::size_t i = 0; i < b; ++i) {
            real_mb.samples.push_back(
                genuine_pool.samples[rng.next_index(genuine_pool.size())]);
        }

        Batch fake_mb;
        fake_mb.samples.reserve(use_malicious ? 2 * b : b);
        for (std::size_t i = 0; i < b; ++i) {
            std::vector<double> z(res.model.noise_dim);
            for (double& v : z) v = rng.next_normal();
            fake_mb.samples.push_back(generate_sample(res.model, z));
        }
        if (use_malicious) {
            for (std::size_t i = 0; i < b; ++i) {
                fake_mb.samples.push_back(
                    labeled_malicious->samples[rng.next_index(labeled_malicious->size())]);
            }
        }

        StepLoss sl;
        sl.discriminator = discriminator_loss(res.model, real_mb, fake_mb);
        ParamVector dgrad = discriminator_gradient(res.model.discriminator_spec,
                                                   res.model.discriminator_params,
                                                   real_mb, fake_mb);
        if (hyper.learning_rate != 0.0) {
            for (std::size_t i = 0; i < dgrad.size(); ++i) {
                res.model.discriminator_params.values[i] -=
                    hyper.learning_rate * dgrad.values[i];
            }
        }

        std::vector<std::vector<double>> noise(b);
        for (auto& z : noise) {
            z.resize(res.model.noise_dim);
            for (double& v : z) v = rng.next_normal();
        }
        Batch gen_out;
        gen_out.samples.reserve(b);
        for (const auto& z : noise) gen_out.samples.push_back(generate_sample(res.model, z));
        sl.generator = generator_loss(res.model, gen_out);
        ParamVector ggrad = generator_gradient(res.model, noise);
        if (hyper.learning_rate != 0.0) {
            for (std::size_t i = 0; i < ggrad.size(); ++i) {
                res.model.generator_params.values[i] -=
                    hyper.learning_rate * ggrad.values[i];
            }
        }
        res.trace.push_back(sl);
    }
    return res;
}

double anomaly_score(const GanModel& model, std::span<const double> x) {
    return 1.0 - discriminator_prob(model, x);
}

Label classify(const GanModel& model, std::span<const double> x, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("classify: threshold must be in (0, 1)");
    }
    return anomaly_score(model, x) >= threshold ? Label::malicious : Label::genuine;
}

}  // namespace fgan
