#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fgan/gan.hpp"
#include "fgan/mlp.hpp"

namespace fgan {

// One client's submitted model state plus the bookkeeping the servers weight
// and schedule by.
struct NodeUpdate {
    std::string source_id;
    ParamVector generator_params;
    ParamVector discriminator_params;
    std::uint64_t sample_count = 1;        // n_k, >= 1
    double local_loss = 0.0;               // reported mean per-sample loss
    std::uint64_t reported_attack_index = 0;
};

struct ImpactVector {
    std::vector<double> impacts;  // one positive weight per update
};

struct ParamPair {
    ParamVector generator;
    ParamVector discriminator;
    bool operator==(const ParamPair&) const = default;
};

// Mean per-sample discriminator cross-entropy over a node's dataset:
// -log D(x) for genuine-labelled samples, -log(1 - D(x)) for malicious ones.
// Unlabelled batches count as all-genuine.
double local_loss(const MlpSpec& disc_spec, const ParamVector& disc_params,
                  const Batch& dataset);
double local_loss(const GanModel& model, const Batch& dataset);

// Sample-count-weighted coordinate-wise mean (weights n_k / n). Generator
// and discriminator halves are combined independently with the same weights.
ParamPair aggregate_fedavg(std::span<const NodeUpdate> updates);

// Impact-weighted variant: unnormalised weights (n_k / n) * h_i,
// renormalised to sum to one so the result stays a convex combination.
// With uniform impacts this reduces to aggregate_fedavg.
ParamPair aggregate_fgan(std::span<const NodeUpdate> updates,
                         const ImpactVector& impacts);

// Round diagnostics: the weighted reported losses, in their literal
// (unnormalised) form. Logged alongside each aggregation round.
double aggregated_loss_fedavg(std::span<const NodeUpdate> updates);
double aggregated_loss_fgan(std::span<const NodeUpdate> updates,
                            const ImpactVector& impacts);

}  // namespace fgan
