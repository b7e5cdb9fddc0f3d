#include "lrsim/workload.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lrsim
{
    namespace
    {
        constexpr int kMaxResamples = 1000;
    }

    TimeNs ms_to_ns(double ms)
    {
        return static_cast<TimeNs>(std::llround(ms * static_cast<double>(kNsPerMs)));
    }

    double TaskSet::total_utilization() const noexcept
    {
        double sum = 0.0;
        for (const auto& t : tasks)
        {
            sum += t.utilization();
        }
        return sum;
    }

    void TaskSet::validate() const
    {
        for (std::size_t i = 0; i < tasks.size(); ++i)
        {
            const Task& t = tasks[i];
            if (t.period <= 0)
            {
                throw std::invalid_argument(fmt::format("task {}: period must be positive", t.id));
            }
            if (!(t.wcet > 0 && t.wcet <= static_cast<double>(t.period)))
            {
                throw std::invalid_argument(fmt::format("task {}: WCET must lie in (0, P]", t.id));
            }
            if (i > 0 && tasks[i - 1].id >= t.id)
            {
                throw std::invalid_argument("task ids must be strictly ascending");
            }
        }
    }

    double static_utilization(const Task& task)
    {
        return task.utilization();
    }

    double dynamic_utilization(const Task& task, const InvocationState& state)
    {
        return state.finished ? state.actual / static_cast<double>(task.period) : task.utilization();
    }

    TimeNs next_release(const Task& task, TimeNs t)
    {
        return task.period * (t / task.period) + task.period;
    }

    Job make_job(const Task& task, std::int64_t index, double actual_ratio)
    {
        Job job;
        job.task_id = task.id;
        job.index = index;
        job.arrival = (index - 1) * task.period;
        job.deadline = index * task.period;
        // cc must stay positive; a zero draw becomes the smallest representable work.
        job.actual_work = std::clamp(actual_ratio * task.wcet, 1e-3, task.wcet);
        job.remaining_work = job.actual_work;
        return job;
    }

    TaskSet generate_task_set(std::size_t n, double u_target, PeriodRangeMs periods, std::uint64_t seed)
    {
        if (n == 0)
        {
            throw std::invalid_argument("task count must be positive");
        }
        if (!(u_target > 0))
        {
            throw std::invalid_argument("target utilization must be positive");
        }
        if (u_target > static_cast<double>(n))
        {
            throw std::invalid_argument(
                fmt::format("target utilization {} infeasible with {} tasks of utilization <= 1", u_target, n));
        }
        if (!(periods.min > 0 && periods.min <= periods.max))
        {
            throw std::invalid_argument("invalid period range");
        }

        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        std::vector<double> utils(n);
        bool ok = false;
        for (int attempt = 0; attempt < kMaxResamples && !ok; ++attempt)
        {
            // UUniFast
            double sum = u_target;
            for (std::size_t i = 0; i + 1 < n; ++i)
            {
                const double next = sum * std::pow(unit(rng), 1.0 / static_cast<double>(n - i - 1));
                utils[i] = sum - next;
                sum = next;
            }
            utils[n - 1] = sum;
            ok = std::all_of(utils.begin(), utils.end(), [](double u) { return u > 0 && u <= 1.0; });
        }
        if (!ok)
        {
            throw std::runtime_error(
                fmt::format("no utilization split with every u_i <= 1 after {} resamples", kMaxResamples));
        }

        std::uniform_real_distribution<double> period_ms(periods.min, periods.max);
        TaskSet set;
        set.tasks.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            Task t;
            t.id = static_cast<int>(i + 1);
            t.period = ms_to_ns(period_ms(rng));
            t.wcet = utils[i] * static_cast<double>(t.period);
            set.tasks.push_back(t);
        }
        return set;
    }

    double draw_actual_ratio(double mean_ratio, std::mt19937_64& rng, RatioDistribution dist)
    {
        if (!(mean_ratio > 0 && mean_ratio <= 1))
        {
            throw std::domain_error(fmt::format("mean cc/W ratio {} outside (0, 1]", mean_ratio));
        }
        if (dist == RatioDistribution::fixed)
        {
            return mean_ratio;
        }
        const double lo = std::max(0.0, 2 * mean_ratio - 1);
        const double hi = std::min(1.0, 2 * mean_ratio);
        if (lo == hi)
        {
            return lo;
        }
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }

    void write_task_set_csv(const TaskSet& set, std::ostream& out)
    {
        out << "id,period_ms,wcet_ms\n";
        for (const auto& t : set.tasks)
        {
            out << fmt::format("{},{:.17g},{:.17g}\n", t.id, ns_to_ms(t.period), t.wcet / kNsPerMs);
        }
    }

    void write_task_set_csv(const TaskSet& set, const std::filesystem::path& path)
    {
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error(fmt::format("cannot write task set {}", path.string()));
        }
        write_task_set_csv(set, out);
    }

    TaskSet read_task_set_csv(std::istream& in)
    {
        std::string line;
        if (!std::getline(in, line) || line.rfind("id,period_ms,wcet_ms", 0) != 0)
        {
            throw std::runtime_error("task set CSV must start with header `id,period_ms,wcet_ms`");
        }
        TaskSet set;
        int line_no = 1;
        while (std::getline(in, line))
        {
            ++line_no;
            if (line.empty() || line == "\r")
            {
                continue;
            }
            std::istringstream row(line);
            std::string id, period, wcet;
            if (!std::getline(row, id, ',') || !std::getline(row, period, ',') || !std::getline(row, wcet))
            {
                throw std::runtime_error(fmt::format("task set CSV line {}: expected 3 fields", line_no));
            }
            try
            {
                Task t;
                t.id = std::stoi(id);
                t.period = ms_to_ns(std::stod(period));
                t.wcet = std::stod(wcet) * kNsPerMs;
                set.tasks.push_back(t);
            }
            catch (const std::exception&)
            {
                throw std::runtime_error(fmt::format("task set CSV line {}: bad number", line_no));
            }
        }
        std::sort(set.tasks.begin(), set.tasks.end(), [](const Task& a, const Task& b) { return a.id < b.id; });
        set.validate();
        return set;
    }

    TaskSet read_task_set_csv(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw std::runtime_error(fmt::format("cannot open task set {}", path.string()));
        }
        return read_task_set_csv(in);
    }
}
