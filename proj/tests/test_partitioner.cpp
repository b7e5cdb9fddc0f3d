#include "fixtures.hpp"

#include "lrsim/partitioner.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

using namespace lrsim;
using lrsim::test::make_task;
using lrsim::test::motivational_set;

TEST_CASE("motivational example partition")
{
    const TaskSet set = motivational_set();
    const Assignment a = ltf_partition(set, 2);
    CHECK(a.home == std::vector<std::size_t>{0, 1, 1});
    CHECK(a.utilization[0] == doctest::Approx(0.3));
    CHECK(a.utilization[1] == doctest::Approx(0.2));
    CHECK(a.per_core[1] == std::vector<std::size_t>{1, 2});

    std::ostringstream out;
    write_assignment_csv(set, a, out);
    CHECK(out.str() == "task_id,core\n1,0\n2,1\n3,1\n");
}

TEST_CASE("single core takes everything")
{
    const TaskSet set = motivational_set();
    const Assignment a = ltf_partition(set, 1);
    CHECK(a.per_core[0] == std::vector<std::size_t>{0, 1, 2});
    CHECK(a.utilization[0] == doctest::Approx(0.5));
}

TEST_CASE("ties go to the smaller id and the lower core")
{
    TaskSet set;
    set.tasks = {make_task(1, 10, 2), make_task(2, 10, 2), make_task(3, 10, 2)};
    const Assignment a = ltf_partition(set, 2);
    CHECK(a.home == std::vector<std::size_t>{0, 1, 0});
}

TEST_CASE("more cores than tasks leaves cores empty")
{
    TaskSet set;
    set.tasks = {make_task(1, 10, 2)};
    const Assignment a = ltf_partition(set, 4);
    CHECK(a.per_core[0].size() == 1);
    CHECK(a.utilization[3] == 0.0);
}

TEST_CASE("infeasible partition throws")
{
    TaskSet set;
    set.tasks = {make_task(1, 10, 9), make_task(2, 10, 9), make_task(3, 10, 9)};
    CHECK_THROWS_AS(ltf_partition(set, 2), PartitionInfeasible);
    CHECK_THROWS_AS(ltf_partition(set, 0), std::invalid_argument);
}

TEST_CASE("partition properties on random sets")
{
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
    {
        const std::size_t m = 2 + seed % 7;
        const TaskSet set = generate_task_set(10 + seed % 11, 0.5 * static_cast<double>(m), {10, 100}, seed);
        const Assignment a = ltf_partition(set, m);

        std::vector<double> sums(m, 0.0);
        for (std::size_t i = 0; i < set.size(); ++i)
        {
            sums[a.home[i]] += set.tasks[i].utilization();
        }
        double max_task = 0;
        for (const Task& t : set.tasks)
        {
            max_task = std::max(max_task, t.utilization());
        }
        const double lo = *std::min_element(a.utilization.begin(), a.utilization.end());
        const double hi = *std::max_element(a.utilization.begin(), a.utilization.end());
        CHECK(hi - lo <= max_task + 1e-12);
        for (std::size_t c = 0; c < m; ++c)
        {
            CHECK(sums[c] == doctest::Approx(a.utilization[c]).epsilon(1e-12));
            CHECK(std::is_sorted(a.per_core[c].begin(), a.per_core[c].end()));
        }

        TaskSet shuffled = set;
        std::mt19937_64 rng(seed);
        std::shuffle(shuffled.tasks.begin(), shuffled.tasks.end(), rng);
        const Assignment b = ltf_partition(shuffled, m);
        for (std::size_t i = 0; i < shuffled.size(); ++i)
        {
            const auto original = static_cast<std::size_t>(shuffled.tasks[i].id - 1);
            CHECK(b.home[i] == a.home[original]);
        }
    }
}
