#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fgan/data_io.hpp"
#include "fgan/hash.hpp"
#include "fgan/sim.hpp"

namespace fs = std::filesystem;
using namespace fgan;

namespace {

// Streams metrics to disk and, unless --quiet, progress lines to stderr.
class CliSink : public MetricsSink {
public:
    CliSink(std::ostream& out, bool quiet) : file_(out), quiet_(quiet) {}

    void on_round(const RoundRecord& rec) override {
        file_.on_round(rec);
        if (quiet_) return;
        const RoundReport& r = rec.report;
        std::fprintf(stderr, "[%s %s] round %llu tick %lld: %s intake=%zu queue=%zu\n",
                     rec.tier.c_str(), r.tier_id.c_str(),
                     static_cast<unsigned long long>(r.round_index),
                     static_cast<long long>(r.tick), r.noop ? "no-op" : "aggregated",
                     r.intake, r.queue_depth_before);
    }
    void on_summary(const SummaryRecord& s) override { file_.on_summary(s); }

private:
    StreamMetricsSink file_;
    bool quiet_;
};

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir, bool quiet) {
    SimConfig cfg = parse_config(config_path);
    if (seed) cfg.seed = *seed;  // flag takes precedence over the config file

    fs::create_directories(out_dir);
    const fs::path metrics_path = fs::path(out_dir) / "metrics.jsonl";
    std::ofstream metrics_file(metrics_path, std::ios::trunc);
    if (!metrics_file) {
        throw std::runtime_error("cannot open " + metrics_path.string());
    }
    CliSink sink(metrics_file, quiet);
    SimMetrics metrics = run_simulation(cfg, &sink);

    const std::uint64_t digest = config_digest(cfg);
    for (const TierModel& tm : metrics.final_models) {
        Checkpoint ckpt;
        ckpt.model = tm.model;
        ckpt.round_index = tm.rounds;
        ckpt.config_digest = digest;
        save_checkpoint(fs::path(out_dir) / (tm.tier_id + ".ckpt"), ckpt);
    }

    std::printf("simulation complete: %llu proxy rounds, %llu central rounds, "
                "%llu blacklist events\n",
                static_cast<unsigned long long>(metrics.summary.proxy_rounds),
                static_cast<unsigned long long>(metrics.summary.central_rounds),
                static_cast<unsigned long long>(metrics.summary.blacklist_events));
    std::printf("metrics: %s\n", metrics_path.string().c_str());
    return 0;
}

void split_by_label(const Batch& all, Batch& genuine, Batch& malicious) {
    genuine.labels.emplace();
    malicious.labels.emplace();
    for (std::size_t i = 0; i < all.size(); ++i) {
        const Label lab = all.labels ? (*all.labels)[i] : Label::genuine;
        if (lab == Label::genuine) {
            genuine.samples.push_back(all.samples[i]);
            genuine.labels->push_back(lab);
        } else {
            malicious.samples.push_back(all.samples[i]);
            malicious.labels->push_back(lab);
        }
    }
}

int cmd_train_local(const std::string& data_path, std::uint64_t steps, double lr,
                    std::uint64_t batch_size, std::uint64_t seed,
                    std::uint64_t noise_dim, bool semi_supervised,
                    const std::string& out_path) {
    Batch all = load_feature_csv(data_path, 0);
    Batch genuine, malicious;
    split_by_label(all, genuine, malicious);
    if (genuine.empty()) {
        throw std::runtime_error("train-local: no genuine-labelled rows in " +
                                 data_path);
    }

    GanModel model = make_gan(all.dim(), noise_dim, model_init_seed(seed));
    TrainHyper hyper;
    hyper.learning_rate = lr;
    hyper.batch_size = batch_size;
    hyper.steps = steps;
    hyper.rng_seed = training_seed(seed, 0, 0, 0);
    const bool semi = semi_supervised && !malicious.empty();
    TrainResult res = train_round(model, genuine, hyper, semi ? &malicious : nullptr);

    Checkpoint ckpt;
    ckpt.model = res.model;
    ckpt.round_index = 0;
    ckpt.config_digest = Hasher{}
                             .str("train-local")
                             .f64(lr)
                             .u64(batch_size)
                             .u64(steps)
                             .u64(seed)
                             .u64(noise_dim)
                             .u64(semi ? 1 : 0)
                             .digest();
    save_checkpoint(out_path, ckpt);

    std::printf("trained %llu steps on %zu genuine samples (dim %zu)\n",
                static_cast<unsigned long long>(steps), genuine.size(), all.dim());
    std::printf("discriminator loss %.6f -> %.6f, generator loss %.6f -> %.6f\n",
                res.trace.front().discriminator, res.trace.back().discriminator,
                res.trace.front().generator, res.trace.back().generator);
    std::printf("checkpoint: %s\n", out_path.c_str());
    return 0;
}

int cmd_aggregate(const std::vector<std::string>& inputs,
                  const std::vector<double>& impacts,
                  const std::vector<std::uint64_t>& counts,
                  const std::string& out_path) {
    if (!impacts.empty() && impacts.size() != inputs.size()) {
        throw std::runtime_error("aggregate: --impacts needs one value per input");
    }
    if (!counts.empty() && counts.size() != inputs.size()) {
        throw std::runtime_error("aggregate: --counts needs one value per input");
    }

    std::vector<Checkpoint> ckpts;
    ckpts.reserve(inputs.size());
    for (const std::string& p : inputs) ckpts.push_back(load_checkpoint(p));
    for (std::size_t i = 1; i < ckpts.size(); ++i) {
        if (ckpts[i].model.generator_spec != ckpts[0].model.generator_spec ||
            ckpts[i].model.discriminator_spec != ckpts[0].model.discriminator_spec) {
            throw std::runtime_error("aggregate: " + inputs[i] +
                                     " has a different architecture than " +
                                     inputs[0]);
        }
    }

    std::vector<NodeUpdate> updates;
    Hasher digest;
    digest.str("aggregate");
    for (std::size_t i = 0; i < ckpts.size(); ++i) {
        NodeUpdate u;
        u.source_id = "input" + std::to_string(i);
        u.generator_params = ckpts[i].model.generator_params;
        u.discriminator_params = ckpts[i].model.discriminator_params;
        u.sample_count = counts.empty() ? 1 : counts[i];
        updates.push_back(std::move(u));
        digest.u64(ckpts[i].config_digest);
        digest.u64(counts.empty() ? 1 : counts[i]);
    }
    ImpactVector h;
    h.impacts = impacts.empty() ? std::vector<double>(inputs.size(), 1.0) : impacts;
    ParamPair agg = aggregate_fgan(updates, h);

    Checkpoint out;
    out.model = ckpts[0].model;
    out.model.generator_params = std::move(agg.generator);
    out.model.discriminator_params = std::move(agg.discriminator);
    out.round_index = 0;
    out.config_digest = digest.digest();
    save_checkpoint(out_path, out);
    std::printf("aggregated %zu checkpoints into %s\n", inputs.size(),
                out_path.c_str());
    return 0;
}

int cmd_inspect_queue(const std::string& trace_path, std::uint64_t round,
                      const std::string& tier_filter) {
    std::ifstream in(trace_path);
    if (!in) throw std::runtime_error("inspect-queue: cannot open " + trace_path);
    std::string line;
    bool found = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        if (j.value("kind", "") != "round") continue;
        if (j.value("round", std::uint64_t{0}) != round) continue;
        if (!tier_filter.empty() && j.value("tier", "") != tier_filter) continue;
        found = true;

        std::printf("%s %s round %llu at tick %lld%s\n",
                    j.value("tier", "?").c_str(), j.value("tier_id", "?").c_str(),
                    static_cast<unsigned long long>(round),
                    static_cast<long long>(j.value("tick", std::int64_t{0})),
                    j.value("noop", false) ? " (no-op)" : "");
        std::printf("  queue depth %llu, intake %llu, theta_a %s%s\n",
                    static_cast<unsigned long long>(
                        j.value("queue_depth_before", std::uint64_t{0})),
                    static_cast<unsigned long long>(j.value("intake", std::uint64_t{0})),
                    j["theta_a"].dump().c_str(),
                    j.value("uniform_impacts", false)
                        ? " (uniform impact fallback)" : "");
        const auto& accepted = j["accepted"];
        const auto& prios = j["accepted_priorities"];
        const auto& impacts = j["impacts"];
        for (std::size_t i = 0; i < accepted.size(); ++i) {
            std::printf("  aggregated %s: priority %s, impact %s\n",
                        accepted[i].get<std::string>().c_str(),
                        prios[i].dump().c_str(), impacts[i].dump().c_str());
        }
        const auto& discarded = j["discarded"];
        const auto& dprios = j["discarded_priorities"];
        for (std::size_t i = 0; i < discarded.size(); ++i) {
            std::printf("  discarded %s: priority %s\n",
                        discarded[i].get<std::string>().c_str(),
                        dprios[i].dump().c_str());
        }
        std::printf("  model hash %s\n", j.value("model_hash", "?").c_str());
    }
    if (!found) {
        throw std::runtime_error("inspect-queue: no matching round " +
                                 std::to_string(round) + " in " + trace_path);
    }
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             double threshold) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    Batch all = load_feature_csv(data_path, ckpt.model.feature_dim());
    Batch genuine, malicious;
    split_by_label(all, genuine, malicious);
    if (genuine.empty() || malicious.empty()) {
        throw std::runtime_error(
            "eval: need both genuine and malicious rows to evaluate");
    }
    EvalResult r = evaluate_model(ckpt.model, genuine.samples, malicious.samples,
                                  threshold);
    std::printf("samples=%zu genuine=%zu malicious=%zu threshold=%.17g\n",
                all.size(), genuine.size(), malicious.size(), threshold);
    std::printf("auc=%.17g accuracy=%.17g fpr=%.17g\n", r.auc, r.accuracy,
                r.false_positive_rate);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated GAN intrusion-detection simulator"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a full scenario");
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::string out_dir = ".";
    bool quiet = false;
    sim->add_option("--config", config_path, "scenario file (JSON)")->required();
    sim->add_option("--seed", seed_override,
                    "override the config seed (flag wins over file)");
    sim->add_option("--out", out_dir, "output directory")
        ->capture_default_str();
    sim->add_flag("--quiet", quiet, "suppress progress output");

    // train-local
    auto* tl = app.add_subcommand("train-local", "train one model on a CSV dataset");
    std::string tl_data, tl_out;
    std::uint64_t tl_steps = 0;
    double tl_lr = 0.05;
    std::uint64_t tl_batch = 32;
    std::uint64_t tl_seed = 1;
    std::uint64_t tl_noise = 4;
    bool tl_semi = false;
    tl->add_option("--data", tl_data, "labelled feature CSV")->required();
    tl->add_option("--steps", tl_steps, "SGD iterations")->required();
    tl->add_option("--lr", tl_lr, "learning rate")->capture_default_str();
    tl->add_option("--batch-size", tl_batch, "minibatch size")->capture_default_str();
    tl->add_option("--seed", tl_seed, "rng seed")->capture_default_str();
    tl->add_option("--noise-dim", tl_noise, "generator noise dimension")
        ->capture_default_str();
    tl->add_flag("--semi-supervised", tl_semi,
                 "feed malicious-labelled rows to the discriminator's fake pool");
    tl->add_option("--out", tl_out, "output checkpoint")->required();

    // aggregate
    auto* ag = app.add_subcommand("aggregate",
                                  "combine checkpoints by impact-weighted average");
    std::vector<std::string> ag_inputs;
    std::vector<double> ag_impacts;
    std::vector<std::uint64_t> ag_counts;
    std::string ag_out;
    ag->add_option("--inputs", ag_inputs, "input checkpoints")
        ->required()
        ->expected(-1);
    ag->add_option("--impacts", ag_impacts,
                   "positive weight per input (default: uniform)")
        ->expected(-1);
    ag->add_option("--counts", ag_counts,
                   "sample count per input (default: 1 each)")
        ->expected(-1);
    ag->add_option("--out", ag_out, "output checkpoint")->required();

    // inspect-queue
    auto* iq = app.add_subcommand("inspect-queue",
                                  "show a round's scheduling decisions");
    std::string iq_trace, iq_tier;
    std::uint64_t iq_round = 0;
    iq->add_option("--trace", iq_trace, "metrics stream file")->required();
    iq->add_option("--round", iq_round, "round index")->required();
    iq->add_option("--tier", iq_tier, "filter by tier: proxy or central");

    // eval
    auto* ev = app.add_subcommand("eval", "score a checkpoint against a CSV dataset");
    std::string ev_ckpt, ev_data;
    double ev_threshold = 0.5;
    ev->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required();
    ev->add_option("--data", ev_data, "labelled feature CSV")->required();
    ev->add_option("--threshold", ev_threshold, "anomaly score threshold")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // usage problems exit 2, --help exits 0
    }

    try {
        if (sim->parsed()) {
            return cmd_simulate(config_path, seed_override, out_dir, quiet);
        }
        if (tl->parsed()) {
            return cmd_train_local(tl_data, tl_steps, tl_lr, tl_batch, tl_seed,
                                   tl_noise, tl_semi, tl_out);
        }
        if (ag->parsed()) {
            return cmd_aggregate(ag_inputs, ag_impacts, ag_counts, ag_out);
        }
        if (iq->parsed()) {
            return cmd_inspect_queue(iq_trace, iq_round, iq_tier);
        }
        if (ev->parsed()) {
            return cmd_eval(ev_ckpt, ev_data, ev_threshold);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
