#include "fgan/aggregate.hpp"

#include <cmath>
#include <stdexcept>

namespace fgan {

double local_loss(const MlpSpec& disc_spec, const ParamVector& disc_params,
                  const Batch& dataset) {
    dataset.validate();
    double total = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const double d = forward(disc_spec, disc_params, dataset.samples[i])[0];
        const Label label =
            dataset.labels ? (*dataset.labels)[i] : Label::genuine;
        total += label == Label::genuine ? -std::log(d) : -std::log(1.0 - d);
    }
    return total / static_cast<double>(dataset.size());
}

double local_loss(const GanModel& model, const Batch& dataset) {
    return local_loss(model.discriminator_spec, model.discriminator_params, dataset);
}

namespace {

std::uint64_t total_samples(std::span<const NodeUpdate> updates) {
    if (updates.empty()) {
        throw std::invalid_argument("aggregate: no updates to aggregate");
    }
    std::uint64_t n = 0;
    for (const auto& u : updates) {
        if (u.sample_count < 1) {
            throw std::invalid_argument("aggregate: sample_count must be >= 1");
        }
        n += u.sample_count;
    }
    return n;
}

void check_lengths(std::span<const NodeUpdate> updates) {
    const std::size_t g = updates.front().generator_params.size();
    const std::size_t d = updates.front().discriminator_params.size();
    for (const auto& u : updates) {
        if (u.generator_params.size() != g || u.discriminator_params.size() != d) {
            throw std::invalid_argument("aggregate: parameter vector length mismatch");
        }
    }
}

ParamPair weighted_mean(std::span<const NodeUpdate> updates,
                        std::span<const double> weights) {
    ParamPair out;
    out.generator.values.assign(updates.front().generator_params.size(), 0.0);
    out.discriminator.values.assign(updates.front().discriminator_params.size(), 0.0);
    for (std::size_t i = 0; i < updates.size(); ++i) {
        const double w = weights[i];
        const auto& g = updates[i].generator_params.values;
        const auto& d = updates[i].discriminator_params.values;
        for (std::size_t c = 0; c < g.size(); ++c) out.generator.values[c] += w * g[c];
        for (std::size_t c = 0; c < d.size(); ++c)
            out.discriminator.values[c] += w * d[c];
    }
    return out;
}

void check_impacts(std::span<const NodeUpdate> updates, const ImpactVector& impacts) {
    if (impacts.impacts.size() != updates.size()) {
        throw std::invalid_argument(
            "aggregate: impact vector length does not match update count");
    }
    for (double h : impacts.impacts) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw std::invalid_argument("aggregate: impacts must be positive and finite");
        }
    }
}

}  // namespace

ParamPair aggregate_fedavg(std::span<const NodeUpdate> updates) {
    const std::uint64_t n = total_samples(updates);
    check_lengths(updates);
    std::vector<double> weights(updates.size());
    for (std::size_t i = 0; i < updates.size(); ++i) {
        weights[i] = static_cast<double>(updates[i].sample_count) /
                     static_cast<double>(n);
    }
    return weighted_mean(updates, weights);
}

ParamPair aggregate_fgan(std::span<const NodeUpdate> updates,
                         const ImpactVector& impacts) {
    const std::uint64_t n = total_samples(updates);
    check_lengths(updates);
    check_impacts(updates, impacts);
    std::vector<double> weights(updates.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        weights[i] = static_cast<double>(updates[i].sample_count) /
                     static_cast<double>(n) * impacts.impacts[i];
        sum += weights[i];
    }
    for (double& w : weights) w /= sum;
    return weighted_mean(updates, weights);
}

double aggregated_loss_fedavg(std::span<const NodeUpdate> updates) {
    const std::uint64_t n = total_samples(updates);
    double f = 0.0;
    for (const auto& u : updates) {
        f += static_cast<double>(u.sample_count) / static_cast<double>(n) *
             u.local_loss;
    }
    return f;
}

double aggregated_loss_fgan(std::span<const NodeUpdate> updates,
                            const ImpactVector& impacts) {
    const std::uint64_t n = total_samples(updates);
    check_impacts(updates, impacts);
    double f = 0.0;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        f += static_cast<double>(updates[i].sample_count) / static_cast<double>(n) *
             impacts.impacts[i] * updates[i].local_loss;
    }
    return f;
}

}  // namespace fgan
