#pragma once

#include "lrsim/workload.hpp"

#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace lrsim
{
    /// Static task-to-core mapping. Tasks are referred to by their position in
    /// the TaskSet; cores are 0-based.
    struct Assignment
    {
        std::vector<std::size_t> home;                  // task index -> core
        std::vector<std::vector<std::size_t>> per_core; // core -> task indices, ascending
        std::vector<double> utilization;                // core -> U(C_j)

        std::size_t cores() const noexcept { return per_core.size(); }
    };

    class PartitionInfeasible : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Largest-task-first worst fit: tasks in non-increasing utilization (ties
    /// by id) go to the least-loaded core (ties by index). Throws
    /// PartitionInfeasible if any core ends above utilization 1.
    Assignment ltf_partition(const TaskSet& tasks, std::size_t cores);

    void write_assignment_csv(const TaskSet& tasks, const Assignment& assignment, std::ostream& out);
}
