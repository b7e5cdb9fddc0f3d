#include "lrsim/core_state.hpp"

#include <algorithm>
#include <stdexcept>

namespace lrsim
{
    SystemState::SystemState(const TaskSet& set, const Assignment& assignment) : tasks(&set)
    {
        if (assignment.home.size() != set.size())
        {
            throw std::invalid_argument("assignment does not cover the task set");
        }
        cores.resize(assignment.cores());
        for (std::size_t c = 0; c < cores.size(); ++c)
        {
            cores[c].index = c;
            cores[c].queue = assignment.per_core[c];
        }
        runtime.resize(set.size());
        for (std::size_t i = 0; i < set.size(); ++i)
        {
            runtime[i].home = assignment.home[i];
        }
    }

    std::size_t SystemState::index_of(int task_id) const
    {
        const auto& ts = tasks->tasks;
        const auto it =
            std::lower_bound(ts.begin(), ts.end(), task_id, [](const Task& t, int id) { return t.id < id; });
        if (it == ts.end() || it->id != task_id)
        {
            throw std::out_of_range("unknown task id");
        }
        return static_cast<std::size_t>(it - ts.begin());
    }

    double SystemState::task_dynamic_utilization(std::size_t i) const
    {
        const TaskRuntime& rt = runtime[i];
        InvocationState state = rt.last;
        state.finished = rt.unfinished_jobs == 0 && rt.last.finished;
        return dynamic_utilization(task(i), state);
    }

    double SystemState::core_dynamic_utilization(std::size_t core) const
    {
        double sum = 0.0;
        for (const std::size_t i : cores[core].queue)
        {
            sum += task_dynamic_utilization(i);
        }
        return sum;
    }

    double SystemState::core_static_utilization(std::size_t core) const
    {
        double sum = 0.0;
        for (const std::size_t i : cores[core].queue)
        {
            sum += task(i).utilization();
        }
        return sum;
    }

    double SystemState::max_dynamic_utilization() const
    {
        double best = 0.0;
        for (std::size_t c = 0; c < cores.size(); ++c)
        {
            best = std::max(best, core_dynamic_utilization(c));
        }
        return best;
    }

    std::optional<std::size_t> edf_pick(std::span<const Job> ready_jobs)
    {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < ready_jobs.size(); ++i)
        {
            if (!best)
            {
                best = i;
                continue;
            }
            const Job& a = ready_jobs[i];
            const Job& b = ready_jobs[*best];
            if (a.deadline != b.deadline ? a.deadline < b.deadline
                                         : (a.task_id != b.task_id ? a.task_id < b.task_id : a.index < b.index))
            {
                best = i;
            }
        }
        return best;
    }
}
