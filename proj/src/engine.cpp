#include "lrsim/engine.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <stdexcept>

namespace lrsim
{
    double EnergyLedger::sum_of_parts() const
    {
        double sum = 0.0;
        for (const double e : busy)
        {
            sum += e;
        }
        for (const double e : idle_active)
        {
            sum += e;
        }
        return sum + switch_energy;
    }

    void accrue_energy(EnergyLedger& ledger, TimeNs interval, std::span<const CoreActivity> cores,
                       double active_power)
    {
        if (interval < 0)
        {
            throw std::invalid_argument("negative accrual interval");
        }
        if (interval == 0)
        {
            return;
        }
        const double joules = active_power * ns_to_s(static_cast<double>(interval));
        for (std::size_t c = 0; c < cores.size(); ++c)
        {
            if (cores[c].power == PowerState::sleeping)
            {
                continue;
            }
            (cores[c].busy ? ledger.busy[c] : ledger.idle_active[c]) += joules;
        }
    }

    void charge_wake(EnergyLedger& ledger, double switch_energy)
    {
        ++ledger.wakes;
        ledger.switch_energy += switch_energy;
    }

    SleepDecision on_core_idle(const SystemState& state, std::size_t core, TimeNs t, TimeNs sleep_threshold)
    {
        SleepDecision decision;
        const auto& queue = state.cores[core].queue;
        if (queue.empty())
        {
            decision.sleep = true;
            return decision;
        }
        TimeNs next = std::numeric_limits<TimeNs>::max();
        for (const std::size_t i : queue)
        {
            next = std::min(next, next_release(state.task(i), t));
        }
        decision.gap = next - t;
        decision.sleep = *decision.gap >= sleep_threshold;
        if (decision.sleep)
        {
            decision.wake_at = next;
        }
        return decision;
    }

    double recompute_global_speed(const SystemState& state, PolicyKind kind, const DerivedSpeeds& speeds)
    {
        return policy_speed(kind, state.max_dynamic_utilization(), speeds.min_scale(), speeds.critical_scale);
    }

    std::string_view to_string(TraceEvent event)
    {
        switch (event)
        {
        case TraceEvent::release: return "release";
        case TraceEvent::start: return "start";
        case TraceEvent::preempt: return "preempt";
        case TraceEvent::complete: return "complete";
        case TraceEvent::sleep: return "sleep";
        case TraceEvent::wake: return "wake";
        case TraceEvent::speed_change: return "speed_change";
        case TraceEvent::realloc: return "realloc";
        }
        return "?";
    }

    void write_trace_csv(std::span<const TraceRecord> trace, std::ostream& out)
    {
        out << "time_ns,core,event,task,detail\n";
        for (const auto& r : trace)
        {
            out << r.time << ',';
            if (r.core >= 0)
            {
                out << r.core;
            }
            out << ',' << to_string(r.event) << ',';
            if (r.task >= 0)
            {
                out << r.task;
            }
            out << ',' << r.detail << '\n';
        }
    }

    void SimConfig::validate() const
    {
        if (cores == 0)
        {
            throw std::invalid_argument("core count must be at least 1");
        }
        if (duration <= 0)
        {
            throw std::invalid_argument("duration must be positive");
        }
        if (!(switch_energy >= 0))
        {
            throw std::invalid_argument("switching energy must be nonnegative");
        }
        if (!(mean_ratio > 0 && mean_ratio <= 1))
        {
            throw std::invalid_argument("mean cc/W ratio must lie in (0, 1]");
        }
        if (critical_scale_override && !(*critical_scale_override > 0 && *critical_scale_override <= 1))
        {
            throw std::invalid_argument("critical scale override must lie in (0, 1]");
        }
        if (sleep_threshold_override && *sleep_threshold_override < 0)
        {
            throw std::invalid_argument("sleep threshold override must be nonnegative");
        }
    }

    namespace
    {
        std::string job_detail(const Job& job)
        {
            return fmt::format("job={}", job.index);
        }

        class Simulator
        {
        public:
            Simulator(const SimConfig& config, const TaskSet& tasks, const Assignment& assignment)
                : config_(config), state_(tasks, assignment), realloc_(config.policy, 0.0, 0)
            {
                config.validate();
                tasks.validate();
                if (assignment.cores() != config.cores)
                {
                    throw std::invalid_argument("assignment core count differs from configuration");
                }

                result_.speeds = derive_speeds(config.power);
                if (config.critical_scale_override)
                {
                    result_.speeds.critical_scale = *config.critical_scale_override;
                    result_.speeds.f_cri = result_.speeds.critical_scale * result_.speeds.f_max;
                }
                result_.sleep_threshold =
                    config.sleep_threshold_override
                        ? *config.sleep_threshold_override
                        : static_cast<TimeNs>(std::llround(
                              sleep_threshold(config.power, result_.speeds, config.switch_energy) * 1e9));
                realloc_ = Reallocator(config.policy, result_.speeds.critical_scale, result_.sleep_threshold);
                result_.ledger = EnergyLedger(config.cores);

                predicted_.assign(config.cores, std::nullopt);
                rngs_.reserve(tasks.size());
                for (const auto& t : tasks.tasks)
                {
                    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                                      static_cast<std::uint32_t>(config.seed >> 32),
                                      static_cast<std::uint32_t>(t.id)};
                    rngs_.emplace_back(seq);
                }
            }

            SimResult run()
            {
                for (std::size_t i = 0; i < state_.tasks->size(); ++i)
                {
                    push_release(i, 0);
                }
                calendar_.push(SimEvent{config_.duration, EventKind::sim_end, 0, seq_++});
                if (calendar_.top().time > 0)
                {
                    // No release at t = 0: cores still get their initial idle decision.
                    update_speed(0);
                    dispatch(0);
                }

                TimeNs prev = 0;
                while (true)
                {
                    TimeNs t = calendar_.top().time;
                    for (const auto& p : predicted_)
                    {
                        if (p)
                        {
                            t = std::min(t, *p);
                        }
                    }
                    advance(prev, t);
                    prev = t;

                    complete_due(t);
                    if (t >= config_.duration)
                    {
                        break;
                    }
                    std::vector<std::size_t> released;
                    while (!calendar_.empty() && calendar_.top().time == t &&
                           calendar_.top().kind == EventKind::job_release)
                    {
                        const SimEvent ev = calendar_.top();
                        calendar_.pop();
                        released.push_back(release(state_.index_of(ev.id), t));
                    }
                    if (config_.policy.kind == PolicyKind::la_realloc)
                    {
                        for (const std::size_t i : released)
                        {
                            consider_reallocation(i, t);
                        }
                    }
                    update_speed(t);
                    dispatch(t);
                }
                finish();
                return std::move(result_);
            }

        private:
            void trace(TimeNs t, int core, TraceEvent event, int task, std::string detail = {})
            {
                if (config_.record_trace)
                {
                    result_.trace.push_back(TraceRecord{t, core, event, task, std::move(detail)});
                }
            }

            void push_release(std::size_t task, TimeNs at)
            {
                if (at < config_.duration)
                {
                    calendar_.push(SimEvent{at, EventKind::job_release, state_.task(task).id, seq_++});
                }
            }

            void advance(TimeNs from, TimeNs to)
            {
                const TimeNs dt = to - from;
                if (dt <= 0)
                {
                    return;
                }
                std::vector<CoreActivity> activity(state_.cores.size());
                for (std::size_t c = 0; c < state_.cores.size(); ++c)
                {
                    CoreState& core = state_.cores[c];
                    activity[c].power = core.power;
                    activity[c].busy = core.running.has_value();
                    if (core.running)
                    {
                        Job& job = running_job(core);
                        job.remaining_work -= speed_ * static_cast<double>(dt);
                        if (job.remaining_work < 0)
                        {
                            result_.stats.max_overrun = std::max(result_.stats.max_overrun, -job.remaining_work);
                            job.remaining_work = 0;
                        }
                    }
                }
                accrue_energy(result_.ledger, dt, activity, power_);
            }

            Job& running_job(CoreState& core)
            {
                for (Job& j : core.ready_jobs)
                {
                    if (key_of(j) == *core.running)
                    {
                        return j;
                    }
                }
                throw std::logic_error("running job missing from ready set");
            }

            void complete_due(TimeNs t)
            {
                for (std::size_t c = 0; c < state_.cores.size(); ++c)
                {
                    if (!predicted_[c] || *predicted_[c] != t)
                    {
                        continue;
                    }
                    CoreState& core = state_.cores[c];
                    const Job job = running_job(core);
                    core.ready_jobs.erase(std::find_if(core.ready_jobs.begin(), core.ready_jobs.end(),
                                                       [&](const Job& j) { return key_of(j) == key_of(job); }));
                    core.running.reset();
                    predicted_[c].reset();

                    TaskRuntime& rt = state_.runtime[state_.index_of(job.task_id)];
                    --rt.unfinished_jobs;
                    rt.last = InvocationState{true, job.actual_work};
                    ++result_.stats.completions;

                    const TimeNs late = t - job.deadline;
                    result_.stats.max_lateness = std::max(result_.stats.max_lateness, static_cast<double>(late));
                    const bool miss = late > kDeadlineSlack;
                    if (miss)
                    {
                        ++result_.ledger.deadline_misses;
                    }
                    trace(t, static_cast<int>(c), TraceEvent::complete, job.task_id,
                          miss ? job_detail(job) + ";late" : job_detail(job));
                }
            }

            std::size_t release(std::size_t task, TimeNs t)
            {
                const Task& spec = state_.task(task);
                TaskRuntime& rt = state_.runtime[task];
                ++rt.released;
                const double ratio =
                    draw_actual_ratio(config_.mean_ratio, rngs_[task], config_.ratio_distribution);
                Job job = make_job(spec, rt.released, ratio);
                CoreState& core = state_.cores[rt.home];
                core.ready_jobs.push_back(job);
                core.idle_decided = false;
                ++rt.unfinished_jobs;
                ++result_.stats.releases;
                trace(t, static_cast<int>(rt.home), TraceEvent::release, spec.id, job_detail(job));
                push_release(task, job.deadline);
                return task;
            }

            void consider_reallocation(std::size_t task, TimeNs t)
            {
                const double before = recompute_global_speed(state_, config_.policy.kind, result_.speeds);
                const std::size_t home = state_.runtime[task].home;
                const ReallocDecision decision = realloc_.upon_task_release(task, t, state_);
                if (!decision.dest)
                {
                    return;
                }
                ReallocRecord rec;
                rec.time = t;
                rec.task_id = state_.task(task).id;
                rec.from = home;
                rec.to = *decision.dest;
                rec.dest_dynamic_after = state_.core_dynamic_utilization(rec.to);
                rec.home_dynamic_after = state_.core_dynamic_utilization(rec.from);
                rec.dest_static_after = state_.core_static_utilization(rec.to);
                rec.speed_before = before;
                rec.speed_after = recompute_global_speed(state_, config_.policy.kind, result_.speeds);
                result_.stats.reallocations.push_back(rec);
                trace(t, static_cast<int>(rec.to), TraceEvent::realloc, rec.task_id, fmt::format("from={}", home));
            }

            void update_speed(TimeNs t)
            {
                const double s = recompute_global_speed(state_, config_.policy.kind, result_.speeds);
                if (s == speed_)
                {
                    return;
                }
                speed_ = s;
                power_ = total_power_at_speed(config_.power, result_.speeds, s);
                result_.stats.min_speed = std::min(result_.stats.min_speed, s);
                result_.stats.max_speed = std::max(result_.stats.max_speed, s);
                trace(t, -1, TraceEvent::speed_change, -1, fmt::format("{:.17g}", s));
            }

            void dispatch(TimeNs t)
            {
                for (std::size_t c = 0; c < state_.cores.size(); ++c)
                {
                    CoreState& core = state_.cores[c];
                    const int ci = static_cast<int>(c);
                    if (!core.ready_jobs.empty())
                    {
                        if (core.power == PowerState::sleeping)
                        {
                            core.power = PowerState::active;
                            core.sleep_until.reset();
                            charge_wake(result_.ledger, config_.switch_energy);
                            trace(t, ci, TraceEvent::wake, -1);
                        }
                        core.idle_decided = false;
                        const std::size_t pick = *edf_pick(core.ready_jobs);
                        const Job& job = core.ready_jobs[pick];
                        if (!core.running || *core.running != key_of(job))
                        {
                            if (core.running)
                            {
                                trace(t, ci, TraceEvent::preempt, core.running->task_id,
                                      fmt::format("job={}", core.running->index));
                            }
                            core.running = key_of(job);
                            trace(t, ci, TraceEvent::start, job.task_id, job_detail(job));
                        }
                        predicted_[c] = t + static_cast<TimeNs>(std::llround(job.remaining_work / speed_));
                        continue;
                    }

                    core.running.reset();
                    predicted_[c].reset();
                    if (core.power == PowerState::active && !core.idle_decided)
                    {
                        core.idle_decided = true;
                        const SleepDecision decision = on_core_idle(state_, c, t, result_.sleep_threshold);
                        if (decision.sleep)
                        {
                            core.power = PowerState::sleeping;
                            core.sleep_until = decision.wake_at;
                            realloc_.on_core_sleep(c);
                            trace(t, ci, TraceEvent::sleep, -1,
                                  decision.wake_at ? fmt::format("until={}", *decision.wake_at) : "until=inf");
                        }
                        else
                        {
                            ++result_.ledger.failed_sleeps;
                        }
                    }
                    else if (core.power == PowerState::sleeping)
                    {
                        // The queue may have shrunk at this instant; keep the wake time current.
                        core.sleep_until = on_core_idle(state_, c, t, 0).wake_at;
                    }
                }
                for (const std::size_t c : realloc_.candidates())
                {
                    if (state_.cores[c].power != PowerState::active)
                    {
                        ++result_.stats.candidate_violations;
                    }
                }
            }

            void finish()
            {
                for (const auto& core : state_.cores)
                {
                    for (const Job& job : core.ready_jobs)
                    {
                        if (job.deadline + kDeadlineSlack < config_.duration)
                        {
                            ++result_.ledger.deadline_misses;
                        }
                    }
                }
                result_.ledger.total = result_.ledger.sum_of_parts();
            }

            const SimConfig& config_;
            SystemState state_;
            Reallocator realloc_;
            SimResult result_;
            std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> calendar_;
            std::vector<std::optional<TimeNs>> predicted_;
            std::vector<std::mt19937_64> rngs_;
            std::uint64_t seq_ = 0;
            double speed_ = std::numeric_limits<double>::quiet_NaN();
            double power_ = 0.0;
        };
    }

    SimResult run(const SimConfig& config, const TaskSet& tasks, const Assignment& assignment)
    {
        return Simulator(config, tasks, assignment).run();
    }
}
