#include "lrsim/partitioner.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <ostream>

namespace lrsim
{
    namespace
    {
        // Absorbs rounding in utilization sums that are exactly 1 in decimal.
        constexpr double kCapacitySlack = 1e-9;
    }

    Assignment ltf_partition(const TaskSet& tasks, std::size_t cores)
    {
        if (cores == 0)
        {
            throw std::invalid_argument("core count must be at least 1");
        }
        std::vector<std::size_t> order(tasks.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double ua = tasks.tasks[a].utilization();
            const double ub = tasks.tasks[b].utilization();
            if (ua != ub)
            {
                return ua > ub;
            }
            return tasks.tasks[a].id < tasks.tasks[b].id;
        });

        Assignment out;
        out.home.assign(tasks.size(), 0);
        out.per_core.assign(cores, {});
        out.utilization.assign(cores, 0.0);
        for (const std::size_t i : order)
        {
            const auto target = static_cast<std::size_t>(
                std::min_element(out.utilization.begin(), out.utilization.end()) - out.utilization.begin());
            out.home[i] = target;
            out.per_core[target].push_back(i);
            out.utilization[target] += tasks.tasks[i].utilization();
        }
        for (std::size_t c = 0; c < cores; ++c)
        {
            std::sort(out.per_core[c].begin(), out.per_core[c].end());
            if (out.utilization[c] > 1.0 + kCapacitySlack)
            {
                throw PartitionInfeasible(
                    fmt::format("LTF partition overloads core {} (U = {:.6f})", c, out.utilization[c]));
            }
        }
        return out;
    }

    void write_assignment_csv(const TaskSet& tasks, const Assignment& assignment, std::ostream& out)
    {
        out << "task_id,core\n";
        for (std::size_t i = 0; i < tasks.size(); ++i)
        {
            out << tasks.tasks[i].id << ',' << assignment.home[i] << '\n';
        }
    }
}
