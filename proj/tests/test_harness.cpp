#include "fixtures.hpp"

#include "lrsim/harness.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lrsim;
using lrsim::test::calibrated;

namespace
{
    SweepSpec small_sweep()
    {
        SweepSpec spec;
        spec.axis = SweepAxis::utilization;
        spec.values = {0.2, 0.5};
        spec.fixed.duration_ms = 300;
        spec.repetitions = 4;
        spec.base_seed = 11;
        spec.power = calibrated();
        spec.threads = 1;
        return spec;
    }

    std::string csv_of(const SweepResult& r, const SweepSpec& s)
    {
        std::ostringstream out;
        write_sweep_csv(r, s, out);
        return out.str();
    }

    std::string slurp(const std::filesystem::path& p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }
}

TEST_CASE("parse_range")
{
    CHECK(parse_range("0.1:0.3:0.1") == std::vector<double>{0.1, 0.2, 0.3});
    CHECK(parse_range("2:16:2").size() == 8);
    CHECK(parse_range("0:0.001:0.0001").size() == 11);
    CHECK(parse_range("0.1:1.0:0.1").back() == 1.0);
    CHECK(parse_range("1:1:1") == std::vector<double>{1.0});
    CHECK(parse_range("0:1:0.3") == std::vector<double>{0.0, 0.3, 0.6, 0.9});
    CHECK_THROWS_AS(parse_range("0:1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_range("0:1:0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_range("1:0:0.1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_range("a:1:0.1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_range("0:1:0.1:2"), std::invalid_argument);
}

TEST_CASE("axis names")
{
    for (const auto axis : {SweepAxis::utilization, SweepAxis::switch_energy, SweepAxis::cores, SweepAxis::cc_ratio})
    {
        CHECK(parse_sweep_axis(to_string(axis)) == axis);
    }
    CHECK_THROWS_AS(parse_sweep_axis("speed"), std::invalid_argument);
}

TEST_CASE("figure presets")
{
    CHECK(figure_preset(3, calibrated()).values.size() == 10);
    CHECK(figure_preset(4, calibrated()).axis == SweepAxis::switch_energy);
    CHECK(figure_preset(5, calibrated()).values.front() == doctest::Approx(0.05));
    CHECK(figure_preset(6, calibrated()).values == std::vector<double>{2, 4, 8, 16});
    CHECK_THROWS_AS(figure_preset(7, calibrated()), std::invalid_argument);
}

TEST_CASE("parameter validation")
{
    SweepSpec spec = small_sweep();
    CHECK_NOTHROW(spec.validate());
    spec.values = {0.5, 0.2};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = small_sweep();
    spec.axis = SweepAxis::cores;
    spec.values = {2.5};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = small_sweep();
    spec.repetitions = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = small_sweep();
    spec.values = {1.5};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    CHECK(small_sweep().at(0.7).utilization == 0.7);
}

TEST_CASE("normalize")
{
    SweepResult r;
    r.rows = {PolicyRow{0.1, PolicyKind::pure_dvs, 2.0}, PolicyRow{0.1, PolicyKind::la_dvs, 4.0},
              PolicyRow{0.1, PolicyKind::la_realloc, 3.0}};
    const SweepResult n = normalize(r);
    CHECK(n.rows[0].normalized == 0.5);
    CHECK(n.rows[1].normalized == 1.0);
    CHECK(n.rows[2].normalized == 0.75);

    r.rows[1].energy = 0.0;
    CHECK_THROWS_WITH_AS(normalize(r), doctest::Contains("zero"), std::runtime_error);
    r.rows.erase(r.rows.begin() + 1);
    CHECK_THROWS_AS(normalize(r), std::runtime_error);
}

TEST_CASE("draw_instance")
{
    ExperimentParams p;
    p.utilization = 0.5;
    p.cores = 4;
    const auto a = draw_instance(p, 5);
    const auto b = draw_instance(p, 5);
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->tasks.size() >= 10);
    CHECK(a->tasks.size() <= 20);
    CHECK(a->tasks.total_utilization() == doctest::Approx(2.0));
    CHECK(a->assignment.home == b->assignment.home);

    p.utilization = 1.0;
    p.cores = 2;
    CHECK_FALSE(draw_instance(p, 5).has_value());
}

TEST_CASE("check_run flags rule breaks")
{
    SimResult r;
    r.speeds.critical_scale = 0.4;
    r.ledger = EnergyLedger(2);
    r.ledger.deadline_misses = 1;
    r.stats.reallocations.push_back(ReallocRecord{0, 1, 0, 1, 0.5, 0.1, 1.2, 0.4, 0.5});
    const SafetyTally t = check_run(r, PolicyKind::la_realloc);
    CHECK(t.leakage_aware_misses == 1);
    CHECK(t.realloc_dest_over_critical == 1);
    CHECK(t.realloc_dest_over_capacity == 1);
    CHECK(t.realloc_speed_increases == 1);
    CHECK_FALSE(t.clean());
    CHECK(check_run(r, PolicyKind::pure_dvs).pure_dvs_misses == 1);

    r.ledger.total = 1.0;
    CHECK(check_run(r, PolicyKind::la_dvs).ledger_imbalances == 1);
}

TEST_CASE("sweeps are paired, clean and independent of threads")
{
    SweepSpec spec = small_sweep();
    const SweepResult one = run_sweep(spec);
    spec.threads = 3;
    const SweepResult three = run_sweep(spec);
    CHECK(csv_of(one, spec) == csv_of(three, spec));
    CHECK(one.safety.clean());
    CHECK(one.safety.runs == 2 * 4 * 3);
    REQUIRE(one.rows.size() == 6);
    CHECK(one.find(0.2, PolicyKind::la_dvs)->normalized == 1.0);
    CHECK(one.find(0.5, PolicyKind::la_realloc)->runs == 4);
    CHECK(one.find(0.3, PolicyKind::la_dvs) == nullptr);
}

TEST_CASE("sweep CSV and plot script")
{
    SweepSpec spec = small_sweep();
    spec.values = {0.3, 1.0};
    spec.repetitions = 2;
    const SweepResult r = run_sweep(spec);
    REQUIRE(r.skipped.size() == 1);
    CHECK(r.skipped[0].value == 1.0);

    const std::string text = csv_of(r, spec);
    CHECK(text.starts_with("# "));
    CHECK(text.find("# skipped value=1 repetitions=2") != std::string::npos);
    CHECK(text.find("\naxis,value,policy,energy_j,normalized,misses,wakes,failed_sleeps,runs\n") !=
          std::string::npos);
    CHECK(text.find("\nU,0.3,la_dvs,") != std::string::npos);
    CHECK(text.find("\nU,1,") == std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "lrsim_harness_test";
    std::filesystem::create_directories(dir);
    const auto csv = dir / "sweep.csv";
    emit(r, spec, csv);
    CHECK(slurp(csv) == text);
    const std::string script = slurp(dir / "sweep.plot.py");
    CHECK(script.find("import matplotlib") != std::string::npos);
    std::filesystem::remove_all(dir);

    CHECK_THROWS_WITH_AS(emit(r, spec, "/nonexistent/dir/sweep.csv"), doctest::Contains("/nonexistent/dir"),
                         std::runtime_error);
}
