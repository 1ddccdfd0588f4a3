#include "fgan/coordination.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fgan {

double compute_priority(double attack_index, std::size_t member_count, Tick now,
                        Tick joined_at, Tick created_at, bool inverted) {
    if (!(attack_index >= 0.0) || !std::isfinite(attack_index)) {
        throw std::invalid_argument("compute_priority: attack index must be >= 0");
    }
    if (member_count == 0) {
        throw std::invalid_argument("compute_priority: member count must be positive");
    }
    if (now <= created_at) {
        throw std::invalid_argument(
            "compute_priority: query time must be after creation time");
    }
    if (joined_at < created_at || joined_at > now) {
        throw std::invalid_argument(
            "compute_priority: join time must lie between creation and now");
    }
    const double maturity = static_cast<double>(now - joined_at) /
                            static_cast<double>(now - created_at);
    const double n = static_cast<double>(member_count);
    if (inverted) return attack_index * maturity / n;
    return attack_index / (n * std::max(maturity, kMaturityFloor));
}

double compute_cluster_priority(double cluster_attack_index,
                                std::size_t cluster_count, Tick now,
                                Tick cluster_created_at, Tick network_created_at,
                                bool inverted) {
    return compute_priority(cluster_attack_index, cluster_count, now,
                            cluster_created_at, network_created_at, inverted);
}

const char* to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::none: return "none";
        case RejectReason::already_has_pending_request:
            return "already_has_pending_request";
        case RejectReason::blacklisted: return "blacklisted";
        case RejectReason::unknown_member: return "unknown_member";
    }
    return "unknown";
}

Scheduler::Scheduler(std::string id, Tick created_at, double participation_fraction,
                     ThetaPolicy theta, Tick suspension_ticks, GanModel initial_model,
                     bool inverted_maturity)
    : id_(std::move(id)),
      created_at_(created_at),
      participation_(participation_fraction),
      theta_policy_(theta),
      suspension_ticks_(suspension_ticks),
      inverted_maturity_(inverted_maturity),
      model_(std::move(initial_model)) {
    if (!(participation_ > 0.0 && participation_ <= 1.0)) {
        throw std::invalid_argument("Scheduler: participation fraction must be in (0,1]");
    }
    if (suspension_ticks_ <= 0) {
        throw std::invalid_argument("Scheduler: suspension time must be positive");
    }
    model_.validate();
    recompute_theta();
}

void Scheduler::add_member(const std::string& source_id, Tick joined_at) {
    if (joined_at < created_at_) {
        throw std::invalid_argument("Scheduler: member cannot join before creation");
    }
    if (!members_.emplace(source_id, Member{joined_at}).second) {
        throw std::invalid_argument("Scheduler: duplicate member id " + source_id);
    }
}

bool Scheduler::is_member(const std::string& source_id) const {
    return members_.count(source_id) != 0;
}

bool Scheduler::is_blacklisted(const std::string& source_id) const {
    return blacklist_.count(source_id) != 0;
}

Tick Scheduler::suspension_end(const std::string& source_id) const {
    auto it = blacklist_.find(source_id);
    return it == blacklist_.end() ? 0 : it->second;
}

bool Scheduler::has_pending(const std::string& source_id) const {
    auto it = members_.find(source_id);
    return it != members_.end() && it->second.pending;
}

Tick Scheduler::member_joined_at(const std::string& source_id) const {
    auto it = members_.find(source_id);
    if (it == members_.end()) {
        throw std::invalid_argument("Scheduler: unknown member " + source_id);
    }
    return it->second.joined_at;
}

int Scheduler::consecutive_high(const std::string& source_id) const {
    auto it = members_.find(source_id);
    if (it == members_.end()) {
        throw std::invalid_argument("Scheduler: unknown member " + source_id);
    }
    return it->second.consecutive_high;
}

std::vector<std::string> Scheduler::blacklisted_sources() const {
    std::vector<std::string> out;
    out.reserve(blacklist_.size());
    for (const auto& [id, _] : blacklist_) out.push_back(id);
    return out;
}

SubmitResult Scheduler::submit_request(const std::string& source_id,
                                       NodeUpdate payload,
                                       std::uint64_t reported_attack_index,
                                       Tick now) {
    auto mit = members_.find(source_id);
    if (mit == members_.end()) {
        return {false, RejectReason::unknown_member, 0};
    }
    if (auto bit = blacklist_.find(source_id); bit != blacklist_.end()) {
        return {false, RejectReason::blacklisted, bit->second};
    }

    Member& member = mit->second;
    if (static_cast<double>(reported_attack_index) > theta_) {
        member.consecutive_high += 1;
    } else {
        member.consecutive_high = 0;
    }
    if (member.consecutive_high >= 3) {
        const Tick until = now + suspension_ticks_;
        blacklist_[source_id] = until;
        member.consecutive_high = 0;
        member.pending = false;
        std::erase_if(queue_, [&](const UpdateRequest& r) {
            return r.source_id == source_id;
        });
        return {false, RejectReason::blacklisted, until};
    }

    if (member.pending) {
        return {false, RejectReason::already_has_pending_request, 0};
    }

    if (payload.generator_params.size() != model_.generator_spec.param_count() ||
        payload.discriminator_params.size() !=
            model_.discriminator_spec.param_count()) {
        throw std::invalid_argument(
            "submit_request: payload does not match registered model specs");
    }

    UpdateRequest req;
    req.source_id = source_id;
    req.reported_attack_index = reported_attack_index;
    req.submitted_at = now;
    req.priority = compute_priority(static_cast<double>(reported_attack_index),
                                    members_.size(), now, member.joined_at,
                                    created_at_, inverted_maturity_);
    req.payload = std::move(payload);
    queue_.push_back(std::move(req));
    member.pending = true;

    accepted_attack_history_.push_back(static_cast<double>(reported_attack_index));
    while (accepted_attack_history_.size() > theta_policy_.window) {
        accepted_attack_history_.pop_front();
    }
    return {true, RejectReason::none, 0};
}

std::vector<Reinstatement> Scheduler::lift_suspensions(Tick now) {
    std::vector<Reinstatement> out;
    for (auto it = blacklist_.begin(); it != blacklist_.end();) {
        if (it->second <= now) {
            members_.at(it->first).joined_at = it->second;
            out.push_back({it->first, it->second});
            it = blacklist_.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

void Scheduler::recompute_theta() {
    if (theta_policy_.kind == ThetaPolicy::Kind::fixed) {
        theta_ = theta_policy_.fixed_value;
        return;
    }
    if (accepted_attack_history_.empty()) {
        theta_ = theta_policy_.min_value;
        return;
    }
    double mean = 0.0;
    for (double v : accepted_attack_history_) mean += v;
    mean /= static_cast<double>(accepted_attack_history_.size());
    theta_ = std::max(theta_policy_.min_value, theta_policy_.multiplier * mean);
}

RoundReport Scheduler::run_round(Tick now) {
    RoundReport rep;
    rep.tier_id = id_;
    rep.round_index = ++round_index_;
    rep.tick = now;
    rep.queue_depth_before = queue_.size();
    rep.theta_in_force = theta_;
    rep.diag_loss_fedavg = std::numeric_limits<double>::quiet_NaN();
    rep.diag_loss_fgan = std::numeric_limits<double>::quiet_NaN();

    if (queue_.empty()) {
        rep.noop = true;
        rep.model_hash = fgan::model_hash(model_);
        recompute_theta();
        return rep;
    }
    if (members_.empty()) {
        throw std::logic_error("run_round: queued requests without members");
    }

    std::stable_sort(queue_.begin(), queue_.end(),
                     [](const UpdateRequest& a, const UpdateRequest& b) {
                         if (a.priority != b.priority) return a.priority > b.priority;
                         if (a.submitted_at != b.submitted_at)
                             return a.submitted_at < b.submitted_at;
                         return a.source_id < b.source_id;
                     });

    std::size_t m = static_cast<std::size_t>(
        std::floor(participation_ * static_cast<double>(members_.size())));
    if (m == 0) {
        m = 1;
        rep.intake_clamped = true;
    }
    m = std::min(m, queue_.size());
    rep.intake = m;

    std::vector<NodeUpdate> updates;
    updates.reserve(m);
    bool any_positive = false;
    for (std::size_t i = 0; i < m; ++i) {
        const UpdateRequest& r = queue_[i];
        rep.accepted_sources.push_back(r.source_id);
        rep.accepted_priorities.push_back(r.priority);
        rep.impacts.push_back(r.priority);
        if (r.priority > 0.0) any_positive = true;
        updates.push_back(r.payload);
    }
    for (std::size_t i = m; i < queue_.size(); ++i) {
        rep.discarded_sources.push_back(queue_[i].source_id);
        rep.discarded_priorities.push_back(queue_[i].priority);
    }

    // A zero-priority payload carries weight (n_k/n)*0 = 0, so only the
    // positive-impact subset enters the weighted mean. When every priority
    // is zero the weighting is undefined; fall back to uniform impacts and
    // flag it.
    std::vector<NodeUpdate> weighted;
    ImpactVector weighted_impacts;
    if (!any_positive) {
        rep.uniform_impacts_fallback = true;
        std::fill(rep.impacts.begin(), rep.impacts.end(), 1.0);
        weighted = updates;
        weighted_impacts.impacts.assign(m, 1.0);
    } else {
        for (std::size_t i = 0; i < m; ++i) {
            if (rep.accepted_priorities[i] > 0.0) {
                weighted.push_back(updates[i]);
                weighted_impacts.impacts.push_back(rep.accepted_priorities[i]);
            }
        }
    }
    for (const NodeUpdate& u : weighted) {
        rep.aggregated_sample_total += u.sample_count;
    }

    ParamPair aggregated = aggregate_fgan(weighted, weighted_impacts);
    rep.diag_loss_fedavg = aggregated_loss_fedavg(updates);
    // Literal impact-weighted loss over everything extracted; zero-impact
    // terms contribute nothing, so they are representable here.
    std::uint64_t n_total = 0;
    for (const NodeUpdate& u : updates) n_total += u.sample_count;
    double diag_fgan = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        diag_fgan += static_cast<double>(updates[i].sample_count) /
                     static_cast<double>(n_total) * rep.impacts[i] *
                     updates[i].local_loss;
    }
    rep.diag_loss_fgan = diag_fgan;

    model_.generator_params = std::move(aggregated.generator);
    model_.discriminator_params = std::move(aggregated.discriminator);
    rep.model_hash = fgan::model_hash(model_);

    queue_.clear();
    for (auto& [_, member] : members_) member.pending = false;
    recompute_theta();
    return rep;
}

void distribute_model(const Scheduler& central, std::span<Scheduler* const> clusters) {
    for (Scheduler* c : clusters) c->set_model(central.current_model());
}

}  // namespace fgan
