#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fgan/mlp.hpp"

namespace fgan {

enum class Label { genuine, malicious };

// Column-consistent set of feature vectors, optionally labelled.
struct Batch {
    std::vector<std::vector<double>> samples;
    std::optional<std::vector<Label>> labels;

    std::size_t size() const { return samples.size(); }
    std::size_t dim() const { return samples.empty() ? 0 : samples.front().size(); }
    bool empty() const { return samples.empty(); }

    // Throws when empty, ragged, or labels are present with the wrong length.
    void validate() const;
};

struct GanModel {
    MlpSpec generator_spec;
    MlpSpec discriminator_spec;
    ParamVector generator_params;
    ParamVector discriminator_params;
    std::size_t noise_dim = 0;

    std::size_t feature_dim() const { return discriminator_spec.input_dim(); }
    void validate() const;
    bool operator==(const GanModel&) const = default;
};

// Discriminator [d, hidden..., 1] with relu/sigmoid, generator
// [noise_dim, hidden..., d] with tanh/identity, Glorot init.
GanModel make_gan(std::size_t feature_dim, std::size_t noise_dim,
                  std::uint64_t seed,
                  const std::vector<std::size_t>& disc_hidden = {16, 8},
                  const std::vector<std::size_t>& gen_hidden = {16});

std::uint64_t model_hash(const GanModel& model);

// D(x): the (clamped) probability that x comes from the genuine distribution.
double discriminator_prob(const GanModel& model, std::span<const double> x);

std::vector<double> generate_sample(const GanModel& model,
                                    std::span<const double> noise);

// Adversarial value: mean log D over real plus mean log(1-D) over fake.
// At D == 1/2 everywhere this is 2*ln(1/2), the indistinguishability point.
double value_function(const GanModel& model, const Batch& real_batch,
                      const Batch& fake_batch);

// The discriminator minimises -V; the generator minimises the
// non-saturating -mean log D(fake).
double discriminator_loss(const GanModel& model, const Batch& real_batch,
                          const Batch& fake_batch);
double generator_loss(const GanModel& model, const Batch& fake_batch);

// Exact gradient of discriminator_loss with respect to the discriminator
// parameters; fake samples are treated as constants.
ParamVector discriminator_gradient(const MlpSpec& disc_spec,
                                   const ParamVector& disc_params,
                                   const Batch& real_batch,
                                   const Batch& fake_batch);

// Exact gradient of generator_loss with respect to the generator parameters,
// back-propagated through the (fixed) discriminator. Discriminator
// parameters are never updated on this path.
ParamVector generator_gradient(const GanModel& model,
                               const std::vector<std::vector<double>>& noise_batch);

struct TrainHyper {
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    std::size_t steps = 1;
    std::uint64_t rng_seed = 0;
};

struct StepLoss {
    double discriminator = 0.0;
    double generator = 0.0;
};

struct TrainResult {
    GanModel model;
    std::vector<StepLoss> trace;
};

// Alternating SGD: one discriminator step then one generator step per
// iteration, minibatches drawn with replacement from the genuine pool.
// When labeled_malicious is given, a minibatch of it is appended to the fake
// side of each discriminator step (semi-supervised mode). Bit-deterministic
// for a fixed seed; learning_rate == 0 leaves the parameters untouched.
TrainResult train_round(const GanModel& model, const Batch& genuine_pool,
                        const TrainHyper& hyper,
                        const Batch* labeled_malicious = nullptr);

// 1 - D(x); values near 1 mean the traffic looks nothing like the genuine
// distribution the model was trained on.
double anomaly_score(const GanModel& model, std::span<const double> x);

// Ties at the threshold classify as malicious.
Label classify(const GanModel& model, std::span<const double> x, double threshold);

}  // namespace fgan
