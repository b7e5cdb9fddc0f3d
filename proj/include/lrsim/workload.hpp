#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace lrsim
{
    /// Simulated time in integer nanoseconds.
    using TimeNs = std::int64_t;

    inline constexpr TimeNs kNsPerMs = 1'000'000;

    /// Converts milliseconds to the nearest nanosecond.
    TimeNs ms_to_ns(double ms);
    inline double ns_to_ms(TimeNs ns) { return static_cast<double>(ns) / kNsPerMs; }
    inline double ns_to_s(double ns) { return ns * 1e-9; }

    /// Periodic task with implicit deadline. The WCET is measured at f_max and
    /// kept fractional so that W/P reproduces the drawn utilization exactly.
    struct Task
    {
        int id = 0;
        TimeNs period = 0;
        double wcet = 0.0; // ns at f_max

        double utilization() const noexcept { return wcet / static_cast<double>(period); }
    };

    /// Completion state of a task's most recent invocation.
    struct InvocationState
    {
        bool finished = false;
        double actual = 0.0; // ns at f_max, meaningful when finished
    };

    /// One released instance of a task. Work is tracked in nanoseconds of
    /// execution at f_max, which is proportional to cycles.
    struct Job
    {
        int task_id = 0;
        std::int64_t index = 1; // 1-based
        TimeNs arrival = 0;
        TimeNs deadline = 0;
        double actual_work = 0.0;
        double remaining_work = 0.0;
    };

    struct TaskSet
    {
        std::vector<Task> tasks; // ascending, unique ids

        double total_utilization() const noexcept;
        std::size_t size() const noexcept { return tasks.size(); }
        bool empty() const noexcept { return tasks.empty(); }

        /// Throws std::invalid_argument on non-positive periods, WCET outside
        /// (0, P], or ids that are not strictly ascending.
        void validate() const;
    };

    double static_utilization(const Task& task);
    double dynamic_utilization(const Task& task, const InvocationState& state);

    /// First release strictly after t.
    TimeNs next_release(const Task& task, TimeNs t);

    Job make_job(const Task& task, std::int64_t index, double actual_ratio);

    struct PeriodRangeMs
    {
        double min = 10.0;
        double max = 100.0;
    };

    /// Draws n tasks with UUniFast utilizations summing to u_target and periods
    /// uniform over the range. Throws std::invalid_argument when u_target > n,
    /// std::runtime_error when 1000 resamples fail to keep every u_i <= 1.
    TaskSet generate_task_set(std::size_t n, double u_target, PeriodRangeMs periods, std::uint64_t seed);

    enum class RatioDistribution
    {
        centered_uniform, // uniform on [max(0, 2mu - 1), min(1, 2mu)]
        fixed,            // always mu
    };

    /// Draws cc/W for one invocation. Throws std::domain_error unless mean in (0, 1].
    double draw_actual_ratio(double mean_ratio, std::mt19937_64& rng,
                             RatioDistribution dist = RatioDistribution::centered_uniform);

    void write_task_set_csv(const TaskSet& set, std::ostream& out);
    void write_task_set_csv(const TaskSet& set, const std::filesystem::path& path);
    TaskSet read_task_set_csv(std::istream& in);
    TaskSet read_task_set_csv(const std::filesystem::path& path);
}
