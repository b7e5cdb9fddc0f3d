#include "lrsim/policies.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace lrsim
{
    namespace
    {
        // Utilization comparisons against the critical scale tolerate rounding in
        // sums such as 0.3 + 0.1.
        constexpr double kUtilSlack = 1e-9;
        // Same for time sums in ns, e.g. 0.2 ms / 0.4 + 1.5 ms against 2 ms.
        constexpr double kTimeSlack = 1e-3;
    }

    std::string_view to_string(PolicyKind kind)
    {
        switch (kind)
        {
        case PolicyKind::pure_dvs: return "pure_dvs";
        case PolicyKind::la_dvs: return "la_dvs";
        case PolicyKind::la_realloc: return "la_realloc";
        }
        return "?";
    }

    std::string_view to_string(BonusMode mode)
    {
        return mode == BonusMode::scaled ? "scaled" : "literal";
    }

    std::string_view to_string(CandidateRule rule)
    {
        return rule == CandidateRule::prose ? "prose" : "pseudocode";
    }

    PolicyKind parse_policy_kind(std::string_view text)
    {
        for (const auto kind : {PolicyKind::pure_dvs, PolicyKind::la_dvs, PolicyKind::la_realloc})
        {
            if (text == to_string(kind))
            {
                return kind;
            }
        }
        throw std::invalid_argument(fmt::format("unknown policy `{}` (pure_dvs|la_dvs|la_realloc)", text));
    }

    BonusMode parse_bonus_mode(std::string_view text)
    {
        if (text == "scaled")
        {
            return BonusMode::scaled;
        }
        if (text == "literal")
        {
            return BonusMode::literal;
        }
        throw std::invalid_argument(fmt::format("unknown bonus mode `{}` (scaled|literal)", text));
    }

    CandidateRule parse_candidate_rule(std::string_view text)
    {
        if (text == "prose")
        {
            return CandidateRule::prose;
        }
        if (text == "pseudocode")
        {
            return CandidateRule::pseudocode;
        }
        throw std::invalid_argument(fmt::format("unknown candidate rule `{}` (prose|pseudocode)", text));
    }

    double policy_speed(PolicyKind kind, double max_dynamic_utilization, double min_scale, double critical_scale)
    {
        if (kind == PolicyKind::pure_dvs)
        {
            return std::clamp(max_dynamic_utilization, min_scale, 1.0);
        }
        return std::min(std::max(critical_scale, max_dynamic_utilization), 1.0);
    }

    double compute_load(const SystemState& state, std::size_t core)
    {
        double load = 0.0;
        for (const Job& job : state.cores[core].ready_jobs)
        {
            load += state.task(state.index_of(job.task_id)).wcet;
        }
        return load;
    }

    double compute_dt(const SystemState& state, std::size_t core, TimeNs t, double critical_scale)
    {
        const auto& queue = state.cores[core].queue;
        if (queue.empty())
        {
            return std::numeric_limits<double>::infinity();
        }
        TimeNs earliest = std::numeric_limits<TimeNs>::max();
        for (const std::size_t i : queue)
        {
            earliest = std::min(earliest, next_release(state.task(i), t));
        }
        return static_cast<double>(earliest - t) - compute_load(state, core) / critical_scale;
    }

    std::optional<std::size_t> select_core(const SystemState& state, std::size_t task,
                                           const std::set<std::size_t>& candidates, double critical_scale)
    {
        const std::size_t home = state.runtime[task].home;
        const double u = state.task(task).utilization();
        std::optional<std::size_t> best;
        double best_dyn = 0.0;
        for (const std::size_t c : candidates)
        {
            if (c == home || state.core_static_utilization(c) + u > 1.0 + kUtilSlack)
            {
                continue;
            }
            const double dyn = state.core_dynamic_utilization(c);
            if (!best || dyn < best_dyn)
            {
                best = c;
                best_dyn = dyn;
            }
        }
        if (best && best_dyn + u <= critical_scale + kUtilSlack)
        {
            return best;
        }
        return std::nullopt;
    }

    void reallocate(SystemState& state, std::size_t task, std::size_t dest)
    {
        TaskRuntime& rt = state.runtime[task];
        const std::size_t home = rt.home;
        if (home == dest)
        {
            throw std::logic_error("reallocation onto the home core");
        }
        CoreState& from = state.cores[home];
        CoreState& to = state.cores[dest];

        from.queue.erase(std::remove(from.queue.begin(), from.queue.end(), task), from.queue.end());
        to.queue.insert(std::upper_bound(to.queue.begin(), to.queue.end(), task), task);

        // Only jobs that have not executed yet may change cores.
        const int id = state.task(task).id;
        auto movable = [&](const Job& j) {
            return j.task_id == id && j.remaining_work == j.actual_work &&
                   !(from.running && *from.running == key_of(j));
        };
        for (const Job& j : from.ready_jobs)
        {
            if (movable(j))
            {
                to.ready_jobs.push_back(j);
                to.idle_decided = false;
            }
        }
        from.ready_jobs.erase(std::remove_if(from.ready_jobs.begin(), from.ready_jobs.end(), movable),
                              from.ready_jobs.end());
        rt.home = dest;
    }

    Reallocator::Reallocator(PolicyConfig config, double critical_scale, TimeNs sleep_threshold)
        : config_(config), critical_scale_(critical_scale), sleep_threshold_(sleep_threshold)
    {
    }

    ReallocDecision Reallocator::upon_task_release(std::size_t task, TimeNs t, SystemState& state)
    {
        ReallocDecision decision;
        const std::size_t home = state.runtime[task].home;
        decision.dt = compute_dt(state, home, t, critical_scale_);

        const double wcet = state.task(task).wcet;
        const double bonus = config_.bonus == BonusMode::scaled ? wcet / critical_scale_ : wcet;
        if (decision.dt + bonus >= static_cast<double>(sleep_threshold_) - kTimeSlack)
        {
            decision.searched = true;
            decision.dest = select_core(state, task, candidates_, critical_scale_);
        }

        const bool shifted = decision.dest.has_value();
        const bool add_home = config_.s_rule == CandidateRule::prose ? !shifted : shifted;
        if (add_home)
        {
            candidates_.insert(home);
        }
        else
        {
            candidates_.erase(home);
        }
        if (shifted)
        {
            reallocate(state, task, *decision.dest);
        }
        return decision;
    }

    void Reallocator::on_core_sleep(std::size_t core)
    {
        candidates_.erase(core);
    }
}
