#include "fixtures.hpp"

#include "lrsim/workload.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace lrsim;
using lrsim::test::make_task;

TEST_CASE("time conversions")
{
    CHECK(ms_to_ns(1.0) == 1'000'000);
    CHECK(ms_to_ns(0.0000004) == 0);
    CHECK(ms_to_ns(0.0000006) == 1);
    CHECK(ns_to_ms(2'500'000) == 2.5);
    CHECK(ns_to_s(1e9) == 1.0);
}

TEST_CASE("task utilizations")
{
    const Task t = make_task(1, 4, 1);
    CHECK(static_utilization(t) == 0.25);
    CHECK(dynamic_utilization(t, InvocationState{}) == 0.25);
    CHECK(dynamic_utilization(t, InvocationState{true, 0.5 * kNsPerMs}) == 0.125);
    CHECK(dynamic_utilization(t, InvocationState{false, 0.5 * kNsPerMs}) == 0.25);
}

TEST_CASE("next_release is strictly after t")
{
    const Task t = make_task(1, 2, 1);
    CHECK(next_release(t, 0) == 2'000'000);
    CHECK(next_release(t, 1'999'999) == 2'000'000);
    CHECK(next_release(t, 2'000'000) == 4'000'000);
}

TEST_CASE("make_job")
{
    const Task t = make_task(3, 5, 2);
    const Job j = make_job(t, 3, 0.5);
    CHECK(j.task_id == 3);
    CHECK(j.arrival == 10'000'000);
    CHECK(j.deadline == 15'000'000);
    CHECK(j.actual_work == 1'000'000.0);
    CHECK(j.remaining_work == j.actual_work);
    CHECK(make_job(t, 1, 0.0).actual_work > 0);
    CHECK(make_job(t, 1, 1.5).actual_work == t.wcet);
}

TEST_CASE("task set validation")
{
    TaskSet set;
    set.tasks = {make_task(1, 2, 1), make_task(2, 4, 1)};
    CHECK_NOTHROW(set.validate());
    CHECK(set.total_utilization() == 0.75);

    set.tasks[1].wcet = 5e6;
    CHECK_THROWS_AS(set.validate(), std::invalid_argument);
    set.tasks[1].wcet = 0;
    CHECK_THROWS_AS(set.validate(), std::invalid_argument);
    set.tasks[1] = make_task(1, 4, 1);
    CHECK_THROWS_AS(set.validate(), std::invalid_argument);
    set.tasks[1] = make_task(2, 0, 0);
    CHECK_THROWS_AS(set.validate(), std::invalid_argument);
}

TEST_CASE("generate_task_set")
{
    SUBCASE("utilization sum and bounds over many seeds")
    {
        for (std::uint64_t seed = 1; seed <= 200; ++seed)
        {
            const std::size_t n = 10 + seed % 11;
            const double u = 0.1 * static_cast<double>(1 + seed % 18);
            const TaskSet set = generate_task_set(n, u, {10, 100}, seed);
            REQUIRE(set.size() == n);
            CHECK(set.total_utilization() == doctest::Approx(u).epsilon(1e-9));
            CHECK_NOTHROW(set.validate());
            for (const Task& t : set.tasks)
            {
                CHECK(t.utilization() > 0);
                CHECK(t.utilization() <= 1.0);
                CHECK(t.period >= ms_to_ns(10));
                CHECK(t.period <= ms_to_ns(100));
            }
        }
    }

    SUBCASE("same seed, same set")
    {
        const TaskSet a = generate_task_set(15, 1.3, {10, 100}, 42);
        const TaskSet b = generate_task_set(15, 1.3, {10, 100}, 42);
        const TaskSet c = generate_task_set(15, 1.3, {10, 100}, 43);
        REQUIRE(a.size() == b.size());
        bool differs = false;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            CHECK(a.tasks[i].period == b.tasks[i].period);
            CHECK(a.tasks[i].wcet == b.tasks[i].wcet);
            differs = differs || a.tasks[i].period != c.tasks[i].period;
        }
        CHECK(differs);
    }

    SUBCASE("every task at full utilization when u equals n")
    {
        const TaskSet set = generate_task_set(1, 1.0, {10, 100}, 7);
        CHECK(set.tasks[0].utilization() == doctest::Approx(1.0));
    }

    SUBCASE("errors")
    {
        CHECK_THROWS_AS(generate_task_set(2, 2.5, {10, 100}, 1), std::invalid_argument);
        CHECK_THROWS_AS(generate_task_set(0, 0.5, {10, 100}, 1), std::invalid_argument);
        CHECK_THROWS_AS(generate_task_set(2, 0.0, {10, 100}, 1), std::invalid_argument);
        CHECK_THROWS_AS(generate_task_set(2, 0.5, {100, 10}, 1), std::invalid_argument);
        CHECK_THROWS_AS(generate_task_set(20, 19.99, {10, 100}, 1), std::runtime_error);
    }
}

TEST_CASE("draw_actual_ratio")
{
    std::mt19937_64 rng(5);
    for (const double mu : {0.1, 0.3, 0.5, 0.7, 0.9})
    {
        const double lo = std::max(0.0, 2 * mu - 1);
        const double hi = std::min(1.0, 2 * mu);
        double sum = 0;
        constexpr int kDraws = 20'000;
        for (int i = 0; i < kDraws; ++i)
        {
            const double r = draw_actual_ratio(mu, rng);
            CHECK(r >= lo);
            CHECK(r <= hi);
            sum += r;
        }
        CHECK(std::abs(sum / kDraws - mu) < 0.01);
    }
    CHECK(draw_actual_ratio(1.0, rng) == 1.0);
    CHECK(draw_actual_ratio(0.4, rng, RatioDistribution::fixed) == 0.4);
    CHECK_THROWS_AS(draw_actual_ratio(0.0, rng), std::domain_error);
    CHECK_THROWS_AS(draw_actual_ratio(1.1, rng), std::domain_error);
}

TEST_CASE("task set CSV round trip")
{
    const TaskSet set = generate_task_set(12, 2.2, {10, 100}, 9);
    std::stringstream buffer;
    write_task_set_csv(set, buffer);
    const TaskSet back = read_task_set_csv(buffer);
    REQUIRE(back.size() == set.size());
    for (std::size_t i = 0; i < set.size(); ++i)
    {
        CHECK(back.tasks[i].id == set.tasks[i].id);
        CHECK(back.tasks[i].period == set.tasks[i].period);
        CHECK(back.tasks[i].wcet == doctest::Approx(set.tasks[i].wcet).epsilon(1e-15));
    }
}

TEST_CASE("task set CSV errors")
{
    std::istringstream no_header("1,2,0.5\n");
    CHECK_THROWS_AS(read_task_set_csv(no_header), std::runtime_error);
    std::istringstream short_row("id,period_ms,wcet_ms\n1,2\n");
    CHECK_THROWS_WITH_AS(read_task_set_csv(short_row), doctest::Contains("line 2"), std::runtime_error);
    std::istringstream bad_number("id,period_ms,wcet_ms\n1,x,0.5\n");
    CHECK_THROWS_WITH_AS(read_task_set_csv(bad_number), doctest::Contains("bad number"), std::runtime_error);
    std::istringstream overfull("id,period_ms,wcet_ms\n1,2,3\n");
    CHECK_THROWS_AS(read_task_set_csv(overfull), std::invalid_argument);
    std::istringstream unsorted("id,period_ms,wcet_ms\n2,4,1\n1,2,1\n");
    CHECK(read_task_set_csv(unsorted).tasks.front().id == 1);
    CHECK_THROWS_AS(read_task_set_csv(std::filesystem::path("/nonexistent/set.csv")), std::runtime_error);
}
