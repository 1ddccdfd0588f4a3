#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgan/coordination.hpp"
#include "fgan/gan.hpp"
#include "fgan/rng.hpp"

namespace fgan {

// Raised for any scenario-description problem; messages name the offending
// key ("clusters[0].C: ...").
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AttackSpec {
    std::string name;
    std::vector<double> mean_shift;    // per-axis additive shift
    std::vector<double> stddev_scale;  // per-axis spread multiplier
    double rate = 0.0;                 // per node per tick (Bernoulli)
    std::vector<int> targets;          // node indices; empty = every node

    bool operator==(const AttackSpec&) const = default;
};

struct TrafficSpec {
    std::vector<double> genuine_mean;
    std::vector<double> genuine_stddev;
    int genuine_per_tick = 1;
    std::vector<AttackSpec> attacks;

    bool operator==(const TrafficSpec&) const = default;
};

struct ThetaConfig {
    std::string policy = "adaptive";  // "adaptive" | "fixed"
    double value = 0.0;               // fixed threshold
    double min = 10.0;
    double multiplier = 5.0;
    std::uint64_t window = 32;

    ThetaPolicy to_policy() const;
    bool operator==(const ThetaConfig&) const = default;
};

struct ClusterConfig {
    int node_count = 5;
    std::vector<Tick> join_schedule;  // per node; empty = all join at tick 0
    double participation = 0.5;       // C
    Tick suspension = 200;            // T_sus
    Tick round_interval = 25;         // max wait between proxy rounds
    ThetaConfig theta;
    TrafficSpec traffic;

    bool operator==(const ClusterConfig&) const = default;
};

struct CentralConfig {
    bool enabled = true;
    double participation = 1.0;  // C_central
    Tick round_interval = 60;

    bool operator==(const CentralConfig&) const = default;
};

struct GanConfig {
    std::uint64_t noise_dim = 4;
    double learning_rate = 0.05;
    std::uint64_t batch_size = 32;
    std::uint64_t steps = 30;          // SGD iterations per training session
    std::uint64_t train_trigger = 32;  // new samples needed before training
    std::vector<std::size_t> disc_hidden = {16, 8};
    std::vector<std::size_t> gen_hidden = {16};

    bool operator==(const GanConfig&) const = default;
};

struct EvalConfig {
    std::uint64_t set_size = 200;

    bool operator==(const EvalConfig&) const = default;
};

struct SimConfig {
    std::uint64_t seed = 1;
    std::uint64_t feature_dim = 4;
    Tick duration = 2000;
    double threshold = 0.5;
    double label_noise = 0.0;
    bool semi_supervised = false;
    bool inverted_maturity = false;
    bool suspend_traffic = true;  // suspended nodes stop receiving traffic
    GanConfig gan;
    EvalConfig evaluation;
    CentralConfig central;
    std::vector<ClusterConfig> clusters;

    // Fills empty per-cluster vectors (join schedules, distribution
    // parameters) with their documented defaults.
    void materialize_defaults();
    // Throws ConfigError naming the offending key.
    void validate() const;

    bool operator==(const SimConfig&) const = default;
};

// The documented default scenario: two clusters of five nodes over a
// 4-dimensional feature space, each cluster facing its own mean-shifted
// attack type.
SimConfig default_config();

// The default cluster pair for an arbitrary feature dimension: cluster 0
// sees attack "alpha" (+4 shift on the first axis), cluster 1 sees "beta"
// (+4 on the second axis, or the first when d == 1).
std::vector<ClusterConfig> default_clusters(std::size_t feature_dim);

std::uint64_t config_digest(const SimConfig& config);

struct TrafficEvent {
    Tick tick = 0;
    int cluster = 0;
    int node = 0;
    std::uint64_t event_id = 0;
    std::vector<double> features;
    Label truth = Label::genuine;
    std::string attack_name;  // empty for genuine traffic
};

// One node-tick of synthetic traffic: genuine_per_tick genuine vectors, then
// one Bernoulli draw per targeting attack type. Consumes only `rng` and the
// id counter, so callers can replay a node's stream exactly.
std::vector<TrafficEvent> generate_traffic(const TrafficSpec& traffic,
                                           std::size_t feature_dim, Tick tick,
                                           int cluster_index, int node_index,
                                           Rng& rng, std::uint64_t& next_event_id);

// Seed-stream derivations used inside run_simulation, exposed so traces can
// be replayed independently of the coordination machinery.
std::uint64_t traffic_stream_seed(std::uint64_t base_seed, int cluster, int node);
std::uint64_t label_stream_seed(std::uint64_t base_seed, int cluster, int node);
std::uint64_t training_seed(std::uint64_t base_seed, int cluster, int node,
                            std::uint64_t session);
std::uint64_t model_init_seed(std::uint64_t base_seed);

struct EvalResult {
    double auc = 0.0;
    double accuracy = 0.0;
    double false_positive_rate = 0.0;
};

// Mann-Whitney AUC of anomaly scores (ties count half).
double rank_auc(std::span<const double> genuine_scores,
                std::span<const double> malicious_scores);

EvalResult evaluate_model(const GanModel& model,
                          const std::vector<std::vector<double>>& genuine,
                          const std::vector<std::vector<double>>& malicious,
                          double threshold);

// Held-out evaluation data, drawn from seed streams disjoint from every
// training stream. attack_names is the global list (first definition wins
// across clusters); malicious[c][a] applies attack a's shift/scale to
// cluster c's genuine distribution.
struct EvaluationSets {
    std::vector<std::string> attack_names;
    std::vector<AttackSpec> attack_params;
    std::vector<std::vector<std::vector<double>>> genuine;                // [c]
    std::vector<std::vector<std::vector<std::vector<double>>>> malicious;  // [c][a]
};

EvaluationSets build_evaluation_sets(const SimConfig& config);

struct EvalEntry {
    std::string cluster_id;
    std::string attack_name;
    EvalResult result;
};

struct RejectionEvent {
    Tick tick = 0;
    std::string source;
    std::string reason;
};

struct BlacklistEvent {
    Tick tick = 0;
    std::string source;
    Tick until = 0;
};

struct ReinstateEvent {
    Tick tick = 0;
    std::string source;
    Tick new_joined_at = 0;
};

// One metrics-stream line per coordination round.
struct RoundRecord {
    std::string tier;  // "proxy" | "central"
    RoundReport report;
    std::vector<EvalEntry> eval;  // the round's model vs every eval set
    std::vector<RejectionEvent> rejections;      // since the tier's last record
    std::vector<BlacklistEvent> blacklists;
    std::vector<ReinstateEvent> reinstatements;
};

struct NodeSummary {
    std::string id;
    std::uint64_t attack_index = 0;
    std::uint64_t malicious_labeled = 0;
    std::uint64_t dataset_size = 0;
    std::uint64_t training_sessions = 0;
};

struct TierHash {
    std::string tier_id;
    std::uint64_t model_hash = 0;
};

struct TierEval {
    std::string tier_id;
    std::vector<EvalEntry> entries;
};

struct SummaryRecord {
    Tick duration = 0;
    std::uint64_t proxy_rounds = 0;
    std::uint64_t central_rounds = 0;
    std::uint64_t blacklist_events = 0;
    std::uint64_t events_generated = 0;
    std::uint64_t events_ingested = 0;
    std::vector<TierHash> final_hashes;
    std::vector<TierEval> final_eval;  // each tier's final model vs the eval sets
    std::vector<NodeSummary> nodes;
    std::vector<RejectionEvent> trailing_rejections;
    std::vector<BlacklistEvent> trailing_blacklists;
    std::vector<ReinstateEvent> trailing_reinstatements;
    std::uint64_t config_digest = 0;
};

// Final model state per tier; not part of the metrics stream, used for
// checkpointing after a run.
struct TierModel {
    std::string tier_id;
    GanModel model;
    std::uint64_t rounds = 0;
};

struct SimMetrics {
    std::vector<RoundRecord> rounds;
    SummaryRecord summary;
    std::vector<TierModel> final_models;
};

// Streaming consumer; the CLI flushes each record to disk as it happens.
class MetricsSink {
public:
    virtual ~MetricsSink() = default;
    virtual void on_round(const RoundRecord& record) = 0;
    virtual void on_summary(const SummaryRecord& summary) = 0;
};

// Deterministic tick loop: traffic, ingest, node training and submission,
// proxy rounds, central rounds, redistribution. Identical configs produce
// identical metrics byte for byte.
SimMetrics run_simulation(const SimConfig& config, MetricsSink* sink = nullptr);

}  // namespace fgan
