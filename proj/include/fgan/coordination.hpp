#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fgan/aggregate.hpp"
#include "fgan/gan.hpp"

namespace fgan {

// Simulation time is integer ticks throughout.
using Tick = std::int64_t;

// The maturity ratio (T - T_s) / (T - T_o) is zero for a source that joined
// this instant, which would make the literal priority formula infinite; it
// is floored here instead.
constexpr double kMaturityFloor = 1e-6;

// Request priority: attack index divided by member count times the maturity
// ratio. With inverted == true the maturity multiplies instead of divides,
// so newly joined sources get *lower* priority.
double compute_priority(double attack_index, std::size_t member_count, Tick now,
                        Tick joined_at, Tick created_at, bool inverted = false);

// Cluster-level priority for the central tier; same law over cluster-level
// inputs (summed attack indices, cluster count, cluster creation times).
double compute_cluster_priority(double cluster_attack_index,
                                std::size_t cluster_count, Tick now,
                                Tick cluster_created_at, Tick network_created_at,
                                bool inverted = false);

struct UpdateRequest {
    std::string source_id;
    NodeUpdate payload;
    std::uint64_t reported_attack_index = 0;
    Tick submitted_at = 0;
    double priority = 0.0;  // fixed once, at enqueue time
};

enum class RejectReason {
    none,
    already_has_pending_request,
    blacklisted,
    unknown_member,
};
const char* to_string(RejectReason reason);

struct SubmitResult {
    bool accepted = false;
    RejectReason reason = RejectReason::none;
    Tick suspended_until = 0;  // meaningful when reason == blacklisted
};

// High-attack-index threshold policy. The adaptive default follows the
// trailing mean of recently accepted reported values.
struct ThetaPolicy {
    enum class Kind { fixed, adaptive };
    Kind kind = Kind::adaptive;
    double fixed_value = 0.0;     // used when kind == fixed
    double min_value = 10.0;      // adaptive floor
    double multiplier = 5.0;      // threshold = multiplier * trailing mean
    std::size_t window = 32;      // trailing sample count

    bool operator==(const ThetaPolicy&) const = default;
};

struct RoundReport {
    std::string tier_id;
    std::uint64_t round_index = 0;  // 1-based, counts every round incl. no-ops
    Tick tick = 0;
    bool noop = false;
    std::size_t queue_depth_before = 0;
    std::size_t intake = 0;  // requests aggregated
    bool intake_clamped = false;
    bool uniform_impacts_fallback = false;
    std::vector<std::string> accepted_sources;   // extraction order
    std::vector<double> accepted_priorities;     // enqueue-time values
    std::vector<double> impacts;                 // weights actually used
    std::vector<std::string> discarded_sources;
    std::vector<double> discarded_priorities;
    double theta_in_force = 0.0;
    double diag_loss_fedavg = 0.0;  // sample-weighted mean of reported losses
    double diag_loss_fgan = 0.0;    // impact-weighted literal form
    std::uint64_t aggregated_sample_total = 0;
    std::uint64_t model_hash = 0;
};

struct Reinstatement {
    std::string source_id;
    Tick new_joined_at = 0;
};

// One coordination tier: bounded-intake priority queue, blacklist and the
// aggregated model it guards. Proxy servers run one per cluster (members are
// nodes); the central server runs one whose members are the clusters.
//
// Single-owner state machine: all mutation goes through these calls, in
// whatever serialized order the caller (the simulator) imposes.
class Scheduler {
public:
    Scheduler(std::string id, Tick created_at, double participation_fraction,
              ThetaPolicy theta, Tick suspension_ticks, GanModel initial_model,
              bool inverted_maturity = false);

    void add_member(const std::string& source_id, Tick joined_at);

    // Evaluates in order: membership, blacklist, high-attack-index
    // bookkeeping, pending-request rule. An over-threshold report counts
    // toward the consecutive-high counter even when the request is then
    // rejected for having one pending; the third consecutive high report
    // blacklists the source and scrubs its queued request, so nothing of its
    // reaches aggregation.
    SubmitResult submit_request(const std::string& source_id, NodeUpdate payload,
                                std::uint64_t reported_attack_index, Tick now);

    // Reinstates every source whose suspension has ended; their join time is
    // reset to the suspension end, so maturity restarts from there.
    std::vector<Reinstatement> lift_suspensions(Tick now);

    // Extracts the top floor(C*N) requests by priority (ties: earlier
    // submission, then source id), aggregates them with their enqueue-time
    // priorities as impacts, empties the queue and installs the new model.
    // Empty queue: bit-level no-op on the model.
    RoundReport run_round(Tick now);

    const GanModel& current_model() const { return model_; }
    void set_model(const GanModel& m) { model_ = m; }

    const std::string& id() const { return id_; }
    Tick created_at() const { return created_at_; }
    std::size_t member_count() const { return members_.size(); }
    std::size_t queue_depth() const { return queue_.size(); }
    double theta_a() const { return theta_; }
    double participation_fraction() const { return participation_; }
    std::uint64_t rounds_run() const { return round_index_; }

    bool is_member(const std::string& source_id) const;
    bool is_blacklisted(const std::string& source_id) const;
    Tick suspension_end(const std::string& source_id) const;
    bool has_pending(const std::string& source_id) const;
    Tick member_joined_at(const std::string& source_id) const;
    int consecutive_high(const std::string& source_id) const;
    std::vector<std::string> blacklisted_sources() const;

private:
    struct Member {
        Tick joined_at = 0;
        int consecutive_high = 0;
        bool pending = false;
    };

    void recompute_theta();

    std::string id_;
    Tick created_at_;
    double participation_;
    ThetaPolicy theta_policy_;
    double theta_ = 0.0;
    Tick suspension_ticks_;
    bool inverted_maturity_;
    GanModel model_;
    std::map<std::string, Member> members_;
    std::map<std::string, Tick> blacklist_;  // source -> suspension end
    std::vector<UpdateRequest> queue_;
    std::deque<double> accepted_attack_history_;
    std::uint64_t round_index_ = 0;
};

// Replaces every cluster's current model with the central one; previous
// copies are dropped. Reputation state is untouched.
void distribute_model(const Scheduler& central, std::span<Scheduler* const> clusters);

}  // namespace fgan
