#pragma once

#include "lrsim/core_state.hpp"
#include "lrsim/partitioner.hpp"
#include "lrsim/policies.hpp"
#include "lrsim/power_model.hpp"
#include "lrsim/workload.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lrsim
{
    /// Kinds of calendar entries, in the order they are served at equal times.
    /// Completions are predicted from the running jobs rather than queued, and
    /// wake-ups coincide with the release that needs the core, so only releases
    /// and the end marker live in the calendar.
    enum class EventKind : std::uint8_t
    {
        job_release = 0,
        job_completion = 1,
        wake = 2,
        sim_end = 3,
    };

    struct SimEvent
    {
        TimeNs time = 0;
        EventKind kind = EventKind::job_release;
        int id = 0; // task id for releases, core index otherwise
        std::uint64_t sequence = 0;

        friend auto operator<=>(const SimEvent&, const SimEvent&) = default;
    };

    struct EnergyLedger
    {
        std::vector<double> busy;        // J per core, executing
        std::vector<double> idle_active; // J per core, awake with nothing to run
        double switch_energy = 0.0;      // J, wakes * E_sw
        std::uint64_t wakes = 0;
        std::uint64_t failed_sleeps = 0;
        std::uint64_t deadline_misses = 0;
        double total = 0.0;

        explicit EnergyLedger(std::size_t cores = 0) : busy(cores, 0.0), idle_active(cores, 0.0) {}

        /// Busy, then idle-active, then switching energy, in core order.
        double sum_of_parts() const;
    };

    struct CoreActivity
    {
        PowerState power = PowerState::active;
        bool busy = false;
    };

    /// Charges `interval` ns at `active_power` watts to every awake core.
    void accrue_energy(EnergyLedger& ledger, TimeNs interval, std::span<const CoreActivity> cores,
                       double active_power);

    /// One sleep-to-active transition.
    void charge_wake(EnergyLedger& ledger, double switch_energy);

    struct SleepDecision
    {
        bool sleep = false;
        std::optional<TimeNs> wake_at; // none: no task left on the core
        std::optional<TimeNs> gap;     // none: infinite
    };

    /// Power-manager decision for a core that has just run out of ready jobs.
    /// Sleeps when the gap to the core's next release is at least the threshold.
    SleepDecision on_core_idle(const SystemState& state, std::size_t core, TimeNs t, TimeNs sleep_threshold);

    /// Global speed from the current per-core dynamic utilizations.
    double recompute_global_speed(const SystemState& state, PolicyKind kind, const DerivedSpeeds& speeds);

    enum class TraceEvent : std::uint8_t
    {
        release,
        start,
        preempt,
        complete,
        sleep,
        wake,
        speed_change,
        realloc,
    };

    std::string_view to_string(TraceEvent event);

    struct TraceRecord
    {
        TimeNs time = 0;
        int core = -1; // -1: global
        TraceEvent event = TraceEvent::release;
        int task = -1; // -1: none
        std::string detail;
    };

    /// CSV: `time_ns,core,event,task,detail`; global/none fields are left empty.
    void write_trace_csv(std::span<const TraceRecord> trace, std::ostream& out);

    struct ReallocRecord
    {
        TimeNs time = 0;
        int task_id = 0;
        std::size_t from = 0;
        std::size_t to = 0;
        double dest_dynamic_after = 0.0;
        double home_dynamic_after = 0.0;
        double dest_static_after = 0.0;
        double speed_before = 0.0;
        double speed_after = 0.0;
    };

    struct RunStats
    {
        std::uint64_t releases = 0;
        std::uint64_t completions = 0;
        std::vector<ReallocRecord> reallocations;
        /// Instants at which S held a sleeping core after dispatch.
        std::uint64_t candidate_violations = 0;
        /// Largest work executed past a job's actual demand (ns at f_max).
        double max_overrun = 0.0;
        double max_lateness = 0.0; // ns
        double min_speed = 1.0;
        double max_speed = 0.0;
    };

    struct SimConfig
    {
        std::size_t cores = 2;
        TimeNs duration = 10'000 * kNsPerMs;
        double switch_energy = 0.5e-3; // J
        double mean_ratio = 1.0;       // mean cc / W
        RatioDistribution ratio_distribution = RatioDistribution::centered_uniform;
        PolicyConfig policy;
        std::uint64_t seed = 1;
        PowerParams power;
        /// Replace the derived critical scale / sleep threshold (worked examples).
        std::optional<double> critical_scale_override;
        std::optional<TimeNs> sleep_threshold_override;
        bool record_trace = false;

        void validate() const;
    };

    struct SimResult
    {
        EnergyLedger ledger;
        RunStats stats;
        std::vector<TraceRecord> trace;
        DerivedSpeeds speeds;
        TimeNs sleep_threshold = 0;
    };

    /// Deadlines count as met up to this lateness, which covers the sub-ns
    /// rounding of completion instants.
    inline constexpr TimeNs kDeadlineSlack = 1000;

    /// Simulates [0, duration]. Deterministic in (config, tasks, assignment).
    SimResult run(const SimConfig& config, const TaskSet& tasks, const Assignment& assignment);
}
