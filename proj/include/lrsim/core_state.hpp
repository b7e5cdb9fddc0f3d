#pragma once

#include "lrsim/partitioner.hpp"
#include "lrsim/workload.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace lrsim
{
    enum class PowerState
    {
        active,
        sleeping,
    };

    struct JobKey
    {
        int task_id = 0;
        std::int64_t index = 0;

        friend bool operator==(const JobKey&, const JobKey&) = default;
    };

    inline JobKey key_of(const Job& job) { return {job.task_id, job.index}; }

    struct CoreState
    {
        std::size_t index = 0;
        std::vector<std::size_t> queue; // task indices homed here, ascending
        std::vector<Job> ready_jobs;    // released, unfinished
        PowerState power = PowerState::active;
        std::optional<TimeNs> sleep_until;
        std::optional<JobKey> running;
        bool idle_decided = false;
    };

    /// Per-task run-time bookkeeping, independent of which core the task is on.
    struct TaskRuntime
    {
        std::size_t home = 0;
        int unfinished_jobs = 0;
        InvocationState last;
        std::int64_t released = 0;
    };

    /// Everything the scheduler and the reallocation policy share.
    struct SystemState
    {
        const TaskSet* tasks = nullptr;
        std::vector<CoreState> cores;
        std::vector<TaskRuntime> runtime;

        SystemState(const TaskSet& set, const Assignment& assignment);

        const Task& task(std::size_t i) const { return tasks->tasks[i]; }
        std::size_t index_of(int task_id) const;

        double task_dynamic_utilization(std::size_t task) const;
        double core_dynamic_utilization(std::size_t core) const;
        double core_static_utilization(std::size_t core) const;
        double max_dynamic_utilization() const;
    };

    /// EDF: earliest deadline, ties by smaller task id, then older job.
    std::optional<std::size_t> edf_pick(std::span<const Job> ready_jobs);
}
