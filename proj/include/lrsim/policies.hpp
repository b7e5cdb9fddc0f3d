#pragma once

#include "lrsim/core_state.hpp"

#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace lrsim
{
    enum class PolicyKind
    {
        pure_dvs,
        la_dvs,
        la_realloc,
    };

    /// Units of the freed-time bonus in the shift-benefit test.
    enum class BonusMode
    {
        scaled,  // W * f_max / f_cri: the job's execution time at critical speed
        literal, // W: execution time at f_max
    };

    /// How the candidate set S reacts to a shift attempt.
    enum class CandidateRule
    {
        prose,      // failed shift adds the home core, successful shift removes it
        pseudocode, // successful shift adds the home core, failed shift removes it
    };

    struct PolicyConfig
    {
        PolicyKind kind = PolicyKind::la_dvs;
        BonusMode bonus = BonusMode::scaled;
        CandidateRule s_rule = CandidateRule::prose;
    };

    std::string_view to_string(PolicyKind kind);
    std::string_view to_string(BonusMode mode);
    std::string_view to_string(CandidateRule rule);
    PolicyKind parse_policy_kind(std::string_view text);
    BonusMode parse_bonus_mode(std::string_view text);
    CandidateRule parse_candidate_rule(std::string_view text);

    /// Global normalized speed for the highest per-core dynamic utilization.
    double policy_speed(PolicyKind kind, double max_dynamic_utilization, double min_scale, double critical_scale);

    /// Full-WCET work (ns at f_max) of the arrived, unfinished jobs on a core.
    double compute_load(const SystemState& state, std::size_t core);

    /// Shortest idle interval (ns) the core would see if it kept all its work and
    /// ran at critical speed: earliest next release in its queue, minus t, minus
    /// the time to drain the load. Negative when the backlog exceeds the gap.
    double compute_dt(const SystemState& state, std::size_t core, TimeNs t, double critical_scale);

    /// Least dynamically loaded core in `candidates` (other than the task's home)
    /// that can take the task statically and stay within the critical scale.
    std::optional<std::size_t> select_core(const SystemState& state, std::size_t task,
                                           const std::set<std::size_t>& candidates, double critical_scale);

    /// Moves the task's queue membership and its not-yet-started jobs to `dest`.
    void reallocate(SystemState& state, std::size_t task, std::size_t dest);

    struct ReallocDecision
    {
        double dt = 0.0;       // ns
        bool searched = false; // shift-benefit condition held
        std::optional<std::size_t> dest;
    };

    /// Run-time reallocation state for one simulation: the candidate set S.
    class Reallocator
    {
    public:
        Reallocator(PolicyConfig config, double critical_scale, TimeNs sleep_threshold);

        /// Invoked once per released job, after every release at this instant
        /// has been enqueued. Performs the reallocation when a destination exists.
        ReallocDecision upon_task_release(std::size_t task, TimeNs t, SystemState& state);

        /// Sleeping cores must not receive work.
        void on_core_sleep(std::size_t core);

        const std::set<std::size_t>& candidates() const noexcept { return candidates_; }

    private:
        PolicyConfig config_;
        double critical_scale_;
        TimeNs sleep_threshold_;
        std::set<std::size_t> candidates_;
    };
}
