#include "fgan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fgan/aggregate.hpp"
#include "fgan/hash.hpp"

namespace fgan {

ThetaPolicy ThetaConfig::to_policy() const {
    ThetaPolicy p;
    if (policy == "fixed") {
        p.kind = ThetaPolicy::Kind::fixed;
        p.fixed_value = value;
    } else {
        p.kind = ThetaPolicy::Kind::adaptive;
        p.min_value = min;
        p.multiplier = multiplier;
        p.window = static_cast<std::size_t>(window);
    }
    return p;
}

namespace {

std::string cluster_key(std::size_t i, const char* field) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "clusters[%zu].%s", i, field);
    return buf;
}

std::string attack_key(std::size_t c, std::size_t a, const char* field) {
    char buf[120];
    std::snprintf(buf, sizeof(buf), "clusters[%zu].traffic.attacks[%zu].%s", c, a,
                  field);
    return buf;
}

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw ConfigError(key + ": " + what);
}

void check_axis_vector(const std::vector<double>& v, std::size_t d,
                       const std::string& key) {
    if (v.size() != d) {
        fail(key, "expected " + std::to_string(d) + " entries, got " +
                      std::to_string(v.size()));
    }
    for (double x : v) {
        if (!std::isfinite(x)) fail(key, "entries must be finite");
    }
}

}  // namespace

void SimConfig::materialize_defaults() {
    for (auto& cl : clusters) {
        if (cl.join_schedule.empty() && cl.node_count > 0) {
            cl.join_schedule.assign(static_cast<std::size_t>(cl.node_count), 0);
        }
        if (cl.traffic.genuine_mean.empty()) {
            cl.traffic.genuine_mean.assign(feature_dim, 0.0);
        }
        if (cl.traffic.genuine_stddev.empty()) {
            cl.traffic.genuine_stddev.assign(feature_dim, 1.0);
        }
        for (auto& atk : cl.traffic.attacks) {
            if (atk.mean_shift.empty()) atk.mean_shift.assign(feature_dim, 0.0);
            if (atk.stddev_scale.empty()) atk.stddev_scale.assign(feature_dim, 1.0);
        }
    }
}

void SimConfig::validate() const {
    if (duration <= 0) fail("duration", "must be positive");
    if (feature_dim == 0) fail("feature_dim", "must be positive");
    if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold", "must be in (0,1)");
    if (!(label_noise >= 0.0 && label_noise <= 1.0)) {
        fail("label_noise", "must be in [0,1]");
    }
    if (gan.noise_dim == 0) fail("gan.noise_dim", "must be positive");
    if (!(gan.learning_rate >= 0.0) || !std::isfinite(gan.learning_rate)) {
        fail("gan.learning_rate", "must be a finite non-negative number");
    }
    if (gan.batch_size == 0) fail("gan.batch_size", "must be positive");
    if (gan.steps == 0) fail("gan.steps", "must be positive");
    if (gan.train_trigger == 0) fail("gan.train_trigger", "must be positive");
    for (std::size_t h : gan.disc_hidden) {
        if (h == 0) fail("gan.disc_hidden", "layer sizes must be positive");
    }
    for (std::size_t h : gan.gen_hidden) {
        if (h == 0) fail("gan.gen_hidden", "layer sizes must be positive");
    }
    if (evaluation.set_size == 0) fail("evaluation.set_size", "must be positive");
    if (!(central.participation > 0.0 && central.participation <= 1.0)) {
        fail("central.C_central", "must be in (0,1]");
    }
    if (central.round_interval <= 0) fail("central.round_interval", "must be positive");

    if (clusters.empty()) fail("clusters", "at least one cluster is required");
    if (clusters.size() > 99) fail("clusters", "at most 99 clusters are supported");

    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const ClusterConfig& cl = clusters[i];
        if (cl.node_count < 1) fail(cluster_key(i, "node_count"), "must be >= 1");
        if (cl.node_count > 99) {
            fail(cluster_key(i, "node_count"), "at most 99 nodes are supported");
        }
        if (!(cl.participation > 0.0 && cl.participation <= 1.0)) {
            fail(cluster_key(i, "C"), "must be in (0,1]");
        }
        if (cl.suspension <= 0) fail(cluster_key(i, "T_sus"), "must be positive");
        if (cl.round_interval <= 0) {
            fail(cluster_key(i, "round_interval"), "must be positive");
        }
        if (cl.theta.policy != "adaptive" && cl.theta.policy != "fixed") {
            fail(cluster_key(i, "theta_a.policy"), "must be \"adaptive\" or \"fixed\"");
        }
        if (cl.theta.policy == "fixed" && !(cl.theta.value > 0.0)) {
            fail(cluster_key(i, "theta_a.value"), "must be positive");
        }
        if (cl.theta.policy == "adaptive") {
            if (!(cl.theta.min > 0.0)) fail(cluster_key(i, "theta_a.min"), "must be positive");
            if (!(cl.theta.multiplier > 0.0)) {
                fail(cluster_key(i, "theta_a.multiplier"), "must be positive");
            }
            if (cl.theta.window == 0) {
                fail(cluster_key(i, "theta_a.window"), "must be positive");
            }
        }
        if (cl.join_schedule.size() != static_cast<std::size_t>(cl.node_count)) {
            fail(cluster_key(i, "join_schedule"),
                 "must have one entry per node (or be omitted)");
        }
        for (Tick j : cl.join_schedule) {
            if (j < 0) fail(cluster_key(i, "join_schedule"), "entries must be >= 0");
        }
        check_axis_vector(cl.traffic.genuine_mean, feature_dim,
                          cluster_key(i, "traffic.genuine_mean"));
        check_axis_vector(cl.traffic.genuine_stddev, feature_dim,
                          cluster_key(i, "traffic.genuine_stddev"));
        for (double s : cl.traffic.genuine_stddev) {
            if (!(s > 0.0)) {
                fail(cluster_key(i, "traffic.genuine_stddev"), "entries must be > 0");
            }
        }
        if (cl.traffic.genuine_per_tick < 0) {
            fail(cluster_key(i, "traffic.genuine_per_tick"), "must be >= 0");
        }
        for (std::size_t a = 0; a < cl.traffic.attacks.size(); ++a) {
            const AttackSpec& atk = cl.traffic.attacks[a];
            if (atk.name.empty()) fail(attack_key(i, a, "name"), "must be non-empty");
            if (!(atk.rate >= 0.0 && atk.rate <= 1.0)) {
                fail(attack_key(i, a, "rate"), "must be in [0,1]");
            }
            check_axis_vector(atk.mean_shift, feature_dim,
                              attack_key(i, a, "mean_shift"));
            check_axis_vector(atk.stddev_scale, feature_dim,
                              attack_key(i, a, "stddev_scale"));
            for (double s : atk.stddev_scale) {
                if (!(s > 0.0)) fail(attack_key(i, a, "stddev_scale"), "entries must be > 0");
            }
            for (int tgt : atk.targets) {
                if (tgt < 0 || tgt >= cl.node_count) {
                    fail(attack_key(i, a, "targets"), "node index out of range");
                }
            }
        }
    }

    // Attack names are global: redefinitions across clusters must agree on
    // the distribution parameters, otherwise the shared evaluation sets would
    // be ambiguous.
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        for (std::size_t a = 0; a < clusters[i].traffic.attacks.size(); ++a) {
            const AttackSpec& atk = clusters[i].traffic.attacks[a];
            for (std::size_t j = 0; j < i; ++j) {
                for (const AttackSpec& other : clusters[j].traffic.attacks) {
                    if (other.name == atk.name &&
                        (other.mean_shift != atk.mean_shift ||
                         other.stddev_scale != atk.stddev_scale)) {
                        fail(attack_key(i, a, "name"),
                             "attack \"" + atk.name +
                                 "\" redefined with different parameters");
                    }
                }
            }
        }
    }
}

std::vector<ClusterConfig> default_clusters(std::size_t feature_dim) {
    std::vector<ClusterConfig> clusters(2);
    AttackSpec alpha;
    alpha.name = "alpha";
    alpha.mean_shift.assign(feature_dim, 0.0);
    alpha.mean_shift[0] = 4.0;
    alpha.rate = 0.2;
    AttackSpec beta;
    beta.name = "beta";
    beta.mean_shift.assign(feature_dim, 0.0);
    beta.mean_shift[feature_dim > 1 ? 1 : 0] = 4.0;
    beta.rate = 0.2;
    clusters[0].traffic.attacks = {alpha};
    clusters[1].traffic.attacks = {beta};
    return clusters;
}

SimConfig default_config() {
    SimConfig cfg;
    cfg.clusters = default_clusters(cfg.feature_dim);
    cfg.materialize_defaults();
    return cfg;
}

std::uint64_t config_digest(const SimConfig& config) {
    Hasher h;
    h.str("sim-config-v1");
    h.u64(config.seed);
    h.u64(config.feature_dim);
    h.u64(static_cast<std::uint64_t>(config.duration));
    h.f64(config.threshold);
    h.f64(config.label_noise);
    h.u64(config.semi_supervised);
    h.u64(config.inverted_maturity);
    h.u64(config.suspend_traffic);
    h.u64(config.gan.noise_dim);
    h.f64(config.gan.learning_rate);
    h.u64(config.gan.batch_size);
    h.u64(config.gan.steps);
    h.u64(config.gan.train_trigger);
    h.u64(config.gan.disc_hidden.size());
    for (std::size_t s : config.gan.disc_hidden) h.u64(s);
    h.u64(config.gan.gen_hidden.size());
    for (std::size_t s : config.gan.gen_hidden) h.u64(s);
    h.u64(config.evaluation.set_size);
    h.u64(config.central.enabled);
    h.f64(config.central.participation);
    h.u64(static_cast<std::uint64_t>(config.central.round_interval));
    h.u64(config.clusters.size());
    for (const ClusterConfig& cl : config.clusters) {
        h.u64(static_cast<std::uint64_t>(cl.node_count));
        h.u64(cl.join_schedule.size());
        for (Tick t : cl.join_schedule) h.u64(static_cast<std::uint64_t>(t));
        h.f64(cl.participation);
        h.u64(static_cast<std::uint64_t>(cl.suspension));
        h.u64(static_cast<std::uint64_t>(cl.round_interval));
        h.str(cl.theta.policy);
        h.f64(cl.theta.value);
        h.f64(cl.theta.min);
        h.f64(cl.theta.multiplier);
        h.u64(cl.theta.window);
        for (double v : cl.traffic.genuine_mean) h.f64(v);
        for (double v : cl.traffic.genuine_stddev) h.f64(v);
        h.u64(static_cast<std::uint64_t>(cl.traffic.genuine_per_tick));
        h.u64(cl.traffic.attacks.size());
        for (const AttackSpec& atk : cl.traffic.attacks) {
            h.str(atk.name);
            for (double v : atk.mean_shift) h.f64(v);
            for (double v : atk.stddev_scale) h.f64(v);
            h.f64(atk.rate);
            h.u64(atk.targets.size());
            for (int t : atk.targets) h.u64(static_cast<std::uint64_t>(t));
        }
    }
    return h.digest();
}

std::uint64_t traffic_stream_seed(std::uint64_t base_seed, int cluster, int node) {
    return derive_seed(base_seed, "traffic", static_cast<std::uint64_t>(cluster),
                       static_cast<std::uint64_t>(node));
}

std::uint64_t label_stream_seed(std::uint64_t base_seed, int cluster, int node) {
    return derive_seed(base_seed, "labels", static_cast<std::uint64_t>(cluster),
                       static_cast<std::uint64_t>(node));
}

std::uint64_t training_seed(std::uint64_t base_seed, int cluster, int node,
                            std::uint64_t session) {
    return derive_seed(base_seed, "train", static_cast<std::uint64_t>(cluster),
                       static_cast<std::uint64_t>(node), session);
}

std::uint64_t model_init_seed(std::uint64_t base_seed) {
    return derive_seed(base_seed, "model-init");
}

std::vector<TrafficEvent> generate_traffic(const TrafficSpec& traffic,
                                           std::size_t feature_dim, Tick tick,
                                           int cluster_index, int node_index,
                                           Rng& rng, std::uint64_t& next_event_id) {
    std::vector<TrafficEvent> events;
    auto sample_vector = [&](const std::vector<double>& shift,
                             const std::vector<double>& scale,
                             bool shifted) {
        std::vector<double> x(feature_dim);
        for (std::size_t j = 0; j < feature_dim; ++j) {
            double mean = traffic.genuine_mean[j];
            double sd = traffic.genuine_stddev[j];
            if (shifted) {
                mean += shift[j];
                sd *= scale[j];
            }
            x[j] = mean + sd * rng.next_normal();
        }
        return x;
    };

    for (int g = 0; g < traffic.genuine_per_tick; ++g) {
        TrafficEvent ev;
        ev.tick = tick;
        ev.cluster = cluster_index;
        ev.node = node_index;
        ev.event_id = next_event_id++;
        ev.features = sample_vector({}, {}, false);
        ev.truth = Label::genuine;
        events.push_back(std::move(ev));
    }
    for (const AttackSpec& atk : traffic.attacks) {
        if (!atk.targets.empty() &&
            std::find(atk.targets.begin(), atk.targets.end(), node_index) ==
                atk.targets.end()) {
            continue;
        }
        if (!rng.next_bernoulli(atk.rate)) continue;
        TrafficEvent ev;
        ev.tick = tick;
        ev.cluster = cluster_index;
        ev.node = node_index;
        ev.event_id = next_event_id++;
        ev.features = sample_vector(atk.mean_shift, atk.stddev_scale, true);
        ev.truth = Label::malicious;
        ev.attack_name = atk.name;
        events.push_back(std::move(ev));
    }
    return events;
}

double rank_auc(std::span<const double> genuine_scores,
                std::span<const double> malicious_scores) {
    if (genuine_scores.empty() || malicious_scores.empty()) {
        throw std::invalid_argument("rank_auc: both score sets must be non-empty");
    }
    struct Scored {
        double score;
        bool positive;
    };
    std::vector<Scored> all;
    all.reserve(genuine_scores.size() + malicious_scores.size());
    for (double s : genuine_scores) all.push_back({s, false});
    for (double s : malicious_scores) all.push_back({s, true});
    std::sort(all.begin(), all.end(),
              [](const Scored& a, const Scored& b) { return a.score < b.score; });

    // Average ranks across ties, then the Mann-Whitney statistic.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].positive) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double np = static_cast<double>(malicious_scores.size());
    const double nn = static_cast<double>(genuine_scores.size());
    const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

EvalResult evaluate_model(const GanModel& model,
                          const std::vector<std::vector<double>>& genuine,
                          const std::vector<std::vector<double>>& malicious,
                          double threshold) {
    if (genuine.empty() || malicious.empty()) {
        throw std::invalid_argument("evaluate_model: empty evaluation set");
    }
    std::vector<double> gs, ms;
    gs.reserve(genuine.size());
    ms.reserve(malicious.size());
    for (const auto& x : genuine) gs.push_back(anomaly_score(model, x));
    for (const auto& x : malicious) ms.push_back(anomaly_score(model, x));

    EvalResult r;
    r.auc = rank_auc(gs, ms);
    std::size_t tp = 0, tn = 0, fp = 0;
    for (double s : ms) {
        if (s >= threshold) ++tp;
    }
    for (double s : gs) {
        if (s >= threshold) {
            ++fp;
        } else {
            ++tn;
        }
    }
    r.accuracy = static_cast<double>(tp + tn) /
                 static_cast<double>(gs.size() + ms.size());
    r.false_positive_rate = static_cast<double>(fp) / static_cast<double>(gs.size());
    return r;
}

namespace {

struct NodeState {
    int cluster_ix = 0;
    int node_ix = 0;
    std::string id;
    Tick join_tick = 0;
    bool joined = false;
    Rng traffic_rng{0};
    Rng label_rng{0};
    std::vector<std::vector<double>> genuine;
    std::vector<std::vector<double>> malicious;
    std::uint64_t attack_index = 0;       // count of malicious-labelled events
    std::uint64_t ingested = 0;
    std::uint64_t new_since_train = 0;
    std::uint64_t sessions = 0;
};

struct PendingEvents {
    std::vector<RejectionEvent> rejections;
    std::vector<BlacklistEvent> blacklists;
    std::vector<ReinstateEvent> reinstatements;

    void drain_into(RoundRecord& rec) {
        rec.rejections = std::move(rejections);
        rec.blacklists = std::move(blacklists);
        rec.reinstatements = std::move(reinstatements);
        rejections.clear();
        blacklists.clear();
        reinstatements.clear();
    }
};

std::string make_cluster_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "c%02zu", i);
    return buf;
}

std::string make_node_id(std::size_t c, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "c%02zun%02zu", c, n);
    return buf;
}

std::vector<EvalEntry> evaluate_against_all(const GanModel& model,
                                            const EvaluationSets& sets,
                                            double threshold) {
    std::vector<EvalEntry> out;
    for (std::size_t c = 0; c < sets.genuine.size(); ++c) {
        for (std::size_t a = 0; a < sets.attack_names.size(); ++a) {
            EvalEntry e;
            e.cluster_id = make_cluster_id(c);
            e.attack_name = sets.attack_names[a];
            e.result = evaluate_model(model, sets.genuine[c], sets.malicious[c][a],
                                      threshold);
            out.push_back(std::move(e));
        }
    }
    return out;
}

}  // namespace

EvaluationSets build_evaluation_sets(const SimConfig& user_config) {
    SimConfig cfg = user_config;
    cfg.materialize_defaults();
    cfg.validate();
    EvaluationSets sets;
    for (const ClusterConfig& cl : cfg.clusters) {
        for (const AttackSpec& atk : cl.traffic.attacks) {
            if (std::find(sets.attack_names.begin(), sets.attack_names.end(),
                          atk.name) == sets.attack_names.end()) {
                sets.attack_names.push_back(atk.name);
                sets.attack_params.push_back(atk);
            }
        }
    }
    const std::size_t d = cfg.feature_dim;
    sets.genuine.resize(cfg.clusters.size());
    sets.malicious.resize(cfg.clusters.size());
    for (std::size_t c = 0; c < cfg.clusters.size(); ++c) {
        const TrafficSpec& tr = cfg.clusters[c].traffic;
        Rng grng(derive_seed(cfg.seed, "eval-genuine", c));
        auto& gset = sets.genuine[c];
        gset.reserve(cfg.evaluation.set_size);
        for (std::uint64_t i = 0; i < cfg.evaluation.set_size; ++i) {
            std::vector<double> x(d);
            for (std::size_t j = 0; j < d; ++j) {
                x[j] = tr.genuine_mean[j] + tr.genuine_stddev[j] * grng.next_normal();
            }
            gset.push_back(std::move(x));
        }
        sets.malicious[c].resize(sets.attack_names.size());
        for (std::size_t a = 0; a < sets.attack_names.size(); ++a) {
            Rng mrng(derive_seed(cfg.seed, "eval-attack", c, a));
            const AttackSpec& atk = sets.attack_params[a];
            auto& mset = sets.malicious[c][a];
            mset.reserve(cfg.evaluation.set_size);
            for (std::uint64_t i = 0; i < cfg.evaluation.set_size; ++i) {
                std::vector<double> x(d);
                for (std::size_t j = 0; j < d; ++j) {
                    x[j] = tr.genuine_mean[j] + atk.mean_shift[j] +
                           tr.genuine_stddev[j] * atk.stddev_scale[j] *
                               mrng.next_normal();
                }
                mset.push_back(std::move(x));
            }
        }
    }
    return sets;
}

namespace {

Batch to_batch(const std::vector<std::vector<double>>& samples, Label label) {
    Batch b;
    b.samples = samples;
    b.labels = std::vector<Label>(samples.size(), label);
    return b;
}

}  // namespace

SimMetrics run_simulation(const SimConfig& user_config, MetricsSink* sink) {
    SimConfig cfg = user_config;
    cfg.materialize_defaults();
    cfg.validate();

    const std::size_t n_clusters = cfg.clusters.size();
    const GanModel initial_model =
        make_gan(cfg.feature_dim, cfg.gan.noise_dim, model_init_seed(cfg.seed),
                 cfg.gan.disc_hidden, cfg.gan.gen_hidden);

    std::vector<Scheduler> cluster_scheds;
    cluster_scheds.reserve(n_clusters);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        cluster_scheds.emplace_back(make_cluster_id(c), Tick{0},
                                    cfg.clusters[c].participation,
                                    cfg.clusters[c].theta.to_policy(),
                                    cfg.clusters[c].suspension, initial_model,
                                    cfg.inverted_maturity);
    }
    // Central tier: clusters are its members, all registered at network
    // creation. Cluster attack indices are sums over members and grow
    // without bound, so the reputation threshold is pinned at infinity here;
    // the penalty mechanism targets nodes inflating their own reports. The
    // suspension length is then never used.
    ThetaPolicy central_theta;
    central_theta.kind = ThetaPolicy::Kind::fixed;
    central_theta.fixed_value = std::numeric_limits<double>::infinity();
    Scheduler central("central", Tick{0}, cfg.central.participation, central_theta,
                      Tick{1}, initial_model, cfg.inverted_maturity);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        central.add_member(make_cluster_id(c), 0);
    }

    std::vector<std::vector<NodeState>> nodes(n_clusters);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        const ClusterConfig& cl = cfg.clusters[c];
        nodes[c].resize(static_cast<std::size_t>(cl.node_count));
        for (int n = 0; n < cl.node_count; ++n) {
            NodeState& ns = nodes[c][static_cast<std::size_t>(n)];
            ns.cluster_ix = static_cast<int>(c);
            ns.node_ix = n;
            ns.id = make_node_id(c, static_cast<std::size_t>(n));
            ns.join_tick = cl.join_schedule[static_cast<std::size_t>(n)];
            ns.traffic_rng = Rng(traffic_stream_seed(cfg.seed, static_cast<int>(c), n));
            ns.label_rng = Rng(label_stream_seed(cfg.seed, static_cast<int>(c), n));
            if (ns.join_tick <= 0) {
                cluster_scheds[c].add_member(ns.id, 0);
                ns.joined = true;
            }
        }
    }

    const EvaluationSets eval_sets = build_evaluation_sets(cfg);

    SimMetrics metrics;
    std::vector<PendingEvents> cluster_events(n_clusters);
    PendingEvents central_events;
    std::vector<Tick> last_proxy_round(n_clusters, 0);
    Tick last_central_round = 0;
    std::uint64_t event_counter = 0;
    std::uint64_t events_generated = 0;
    std::uint64_t events_ingested = 0;
    std::uint64_t blacklist_total = 0;

    auto emit = [&](RoundRecord rec) {
        if (sink) sink->on_round(rec);
        metrics.rounds.push_back(std::move(rec));
    };

    auto cluster_attack_sum = [&](std::size_t c) {
        std::uint64_t sum = 0;
        for (const NodeState& ns : nodes[c]) {
            if (ns.joined) sum += ns.attack_index;
        }
        return sum;
    };

    for (Tick t = 1; t <= cfg.duration; ++t) {
        if (cfg.central.enabled) {
            for (const Reinstatement& r : central.lift_suspensions(t)) {
                central_events.reinstatements.push_back(
                    {t, r.source_id, r.new_joined_at});
            }
        }

        for (std::size_t c = 0; c < n_clusters; ++c) {
            Scheduler& sched = cluster_scheds[c];
            const ClusterConfig& cl = cfg.clusters[c];

            for (const Reinstatement& r : sched.lift_suspensions(t)) {
                cluster_events[c].reinstatements.push_back(
                    {t, r.source_id, r.new_joined_at});
            }
            for (NodeState& ns : nodes[c]) {
                if (!ns.joined && ns.join_tick == t) {
                    sched.add_member(ns.id, t);
                    ns.joined = true;
                }
            }

            for (NodeState& ns : nodes[c]) {
                if (!ns.joined) continue;
                if (cfg.suspend_traffic && sched.is_blacklisted(ns.id)) continue;
                auto events = generate_traffic(cl.traffic, cfg.feature_dim, t,
                                               static_cast<int>(c), ns.node_ix,
                                               ns.traffic_rng, event_counter);
                events_generated += events.size();
                for (TrafficEvent& ev : events) {
                    Label label = ev.truth;
                    if (cfg.label_noise > 0.0 &&
                        ns.label_rng.next_bernoulli(cfg.label_noise)) {
                        label = label == Label::genuine ? Label::malicious
                                                        : Label::genuine;
                    }
                    if (label == Label::malicious) {
                        ns.malicious.push_back(std::move(ev.features));
                        ns.attack_index += 1;
                    } else {
                        ns.genuine.push_back(std::move(ev.features));
                    }
                    ns.ingested += 1;
                    ns.new_since_train += 1;
                    events_ingested += 1;
                }
            }

            for (NodeState& ns : nodes[c]) {
                if (!ns.joined) continue;
                if (ns.new_since_train < cfg.gan.train_trigger) continue;
                if (sched.has_pending(ns.id)) continue;
                if (ns.genuine.empty()) continue;  // cannot train yet

                Batch pool = to_batch(ns.genuine, Label::genuine);
                TrainHyper hyper;
                hyper.learning_rate = cfg.gan.learning_rate;
                hyper.batch_size = cfg.gan.batch_size;
                hyper.steps = cfg.gan.steps;
                hyper.rng_seed = training_seed(cfg.seed, static_cast<int>(c),
                                               ns.node_ix, ns.sessions);
                Batch mal = to_batch(ns.malicious, Label::malicious);
                const bool semi = cfg.semi_supervised && !ns.malicious.empty();
                TrainResult tr = train_round(sched.current_model(), pool, hyper,
                                             semi ? &mal : nullptr);
                ns.sessions += 1;
                ns.new_since_train = 0;

                Batch loss_set = pool;
                if (semi) {
                    loss_set.samples.insert(loss_set.samples.end(),
                                            mal.samples.begin(), mal.samples.end());
                    loss_set.labels->insert(loss_set.labels->end(),
                                            mal.labels->begin(), mal.labels->end());
                }
                NodeUpdate upd;
                upd.source_id = ns.id;
                upd.generator_params = tr.model.generator_params;
                upd.discriminator_params = tr.model.discriminator_params;
                upd.sample_count = ns.genuine.size();
                upd.local_loss = local_loss(tr.model, loss_set);
                upd.reported_attack_index = ns.attack_index;

                const bool was_blacklisted = sched.is_blacklisted(ns.id);
                SubmitResult res =
                    sched.submit_request(ns.id, std::move(upd), ns.attack_index, t);
                if (!res.accepted) {
                    cluster_events[c].rejections.push_back(
                        {t, ns.id, to_string(res.reason)});
                    if (res.reason == RejectReason::blacklisted && !was_blacklisted &&
                        sched.is_blacklisted(ns.id)) {
                        cluster_events[c].blacklists.push_back(
                            {t, ns.id, res.suspended_until});
                        blacklist_total += 1;
                    }
                }
            }

            const std::size_t n_members = sched.member_count();
            const bool timer_due = (t - last_proxy_round[c]) >= cl.round_interval;
            const bool load_due =
                n_members > 0 &&
                sched.queue_depth() >=
                    static_cast<std::size_t>(std::ceil(
                        cl.participation * static_cast<double>(n_members)));
            if (timer_due || (load_due && sched.queue_depth() > 0)) {
                RoundReport rep = sched.run_round(t);
                last_proxy_round[c] = t;
                metrics.summary.proxy_rounds += 1;

                RoundRecord rec;
                rec.tier = "proxy";
                rec.report = rep;
                rec.eval = evaluate_against_all(sched.current_model(), eval_sets,
                                                cfg.threshold);
                cluster_events[c].drain_into(rec);
                emit(std::move(rec));

                if (!rep.noop && cfg.central.enabled) {
                    NodeUpdate cu;
                    cu.source_id = sched.id();
                    cu.generator_params = sched.current_model().generator_params;
                    cu.discriminator_params =
                        sched.current_model().discriminator_params;
                    cu.sample_count = std::max<std::uint64_t>(
                        rep.aggregated_sample_total, 1);
                    cu.local_loss = rep.diag_loss_fedavg;
                    const std::uint64_t a_c = cluster_attack_sum(c);
                    cu.reported_attack_index = a_c;
                    const bool was_blacklisted = central.is_blacklisted(sched.id());
                    SubmitResult res =
                        central.submit_request(sched.id(), std::move(cu), a_c, t);
                    if (!res.accepted) {
                        central_events.rejections.push_back(
                            {t, sched.id(), to_string(res.reason)});
                        if (res.reason == RejectReason::blacklisted &&
                            !was_blacklisted && central.is_blacklisted(sched.id())) {
                            central_events.blacklists.push_back(
                                {t, sched.id(), res.suspended_until});
                            blacklist_total += 1;
                        }
                    }
                }
            }
        }

        if (cfg.central.enabled) {
            std::size_t pending_clusters = 0;
            for (std::size_t c = 0; c < n_clusters; ++c) {
                if (central.has_pending(make_cluster_id(c))) ++pending_clusters;
            }
            const bool timer_due =
                (t - last_central_round) >= cfg.central.round_interval;
            const bool load_due =
                pending_clusters > 0 && pending_clusters >= (n_clusters + 1) / 2;
            if (timer_due || load_due) {
                RoundReport rep = central.run_round(t);
                last_central_round = t;
                metrics.summary.central_rounds += 1;

                RoundRecord rec;
                rec.tier = "central";
                rec.report = rep;
                rec.eval = evaluate_against_all(central.current_model(), eval_sets,
                                                cfg.threshold);
                central_events.drain_into(rec);
                emit(std::move(rec));

                if (!rep.noop) {
                    std::vector<Scheduler*> ptrs;
                    ptrs.reserve(n_clusters);
                    for (auto& s : cluster_scheds) ptrs.push_back(&s);
                    distribute_model(central, ptrs);
                }
            }
        }
    }

    SummaryRecord& sum = metrics.summary;
    sum.duration = cfg.duration;
    sum.blacklist_events = blacklist_total;
    sum.events_generated = events_generated;
    sum.events_ingested = events_ingested;
    for (std::size_t c = 0; c < n_clusters; ++c) {
        sum.final_hashes.push_back(
            {cluster_scheds[c].id(), model_hash(cluster_scheds[c].current_model())});
        sum.final_eval.push_back(
            {cluster_scheds[c].id(),
             evaluate_against_all(cluster_scheds[c].current_model(), eval_sets,
                                  cfg.threshold)});
    }
    if (cfg.central.enabled) {
        sum.final_hashes.push_back({central.id(), model_hash(central.current_model())});
        sum.final_eval.push_back(
            {central.id(), evaluate_against_all(central.current_model(), eval_sets,
                                                cfg.threshold)});
    }
    for (std::size_t c = 0; c < n_clusters; ++c) {
        for (const NodeState& ns : nodes[c]) {
            NodeSummary n;
            n.id = ns.id;
            n.attack_index = ns.attack_index;
            n.malicious_labeled = ns.malicious.size();
            n.dataset_size = ns.ingested;
            n.training_sessions = ns.sessions;
            sum.nodes.push_back(std::move(n));
        }
    }
    for (std::size_t c = 0; c < n_clusters; ++c) {
        auto& pe = cluster_events[c];
        sum.trailing_rejections.insert(sum.trailing_rejections.end(),
                                       pe.rejections.begin(), pe.rejections.end());
        sum.trailing_blacklists.insert(sum.trailing_blacklists.end(),
                                       pe.blacklists.begin(), pe.blacklists.end());
        sum.trailing_reinstatements.insert(sum.trailing_reinstatements.end(),
                                           pe.reinstatements.begin(),
                                           pe.reinstatements.end());
    }
    sum.trailing_rejections.insert(sum.trailing_rejections.end(),
                                   central_events.rejections.begin(),
                                   central_events.rejections.end());
    sum.trailing_blacklists.insert(sum.trailing_blacklists.end(),
                                   central_events.blacklists.begin(),
                                   central_events.blacklists.end());
    sum.trailing_reinstatements.insert(sum.trailing_reinstatements.end(),
                                       central_events.reinstatements.begin(),
                                       central_events.reinstatements.end());
    sum.config_digest = config_digest(cfg);

    for (std::size_t c = 0; c < n_clusters; ++c) {
        metrics.final_models.push_back({cluster_scheds[c].id(),
                                        cluster_scheds[c].current_model(),
                                        cluster_scheds[c].rounds_run()});
    }
    if (cfg.central.enabled) {
        metrics.final_models.push_back(
            {central.id(), central.current_model(), central.rounds_run()});
    }

    if (sink) sink->on_summary(sum);
    return metrics;
}

}  // namespace fgan
