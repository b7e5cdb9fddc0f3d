#pragma once

#include "lrsim/engine.hpp"
#include "lrsim/partitioner.hpp"
#include "lrsim/policies.hpp"
#include "lrsim/power_model.hpp"
#include "lrsim/workload.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lrsim
{
    enum class SweepAxis
    {
        utilization,   // U = U_tot / m
        switch_energy, // E_sw (J)
        cores,         // m
        cc_ratio,      // mean cc / W
    };

    std::string_view to_string(SweepAxis axis);
    SweepAxis parse_sweep_axis(std::string_view text);

    inline constexpr std::array<PolicyKind, 3> kComparedPolicies{PolicyKind::pure_dvs, PolicyKind::la_dvs,
                                                                 PolicyKind::la_realloc};

    /// One point of the experiment space.
    struct ExperimentParams
    {
        double utilization = 0.3;
        double switch_energy = 0.5e-3;
        std::size_t cores = 2;
        double cc_ratio = 0.5;
        std::size_t tasks_min = 10;
        std::size_t tasks_max = 20;
        PeriodRangeMs periods;
        double duration_ms = 10'000.0;
        RatioDistribution ratio_distribution = RatioDistribution::centered_uniform;
        BonusMode bonus = BonusMode::scaled;
        CandidateRule s_rule = CandidateRule::prose;

        void validate() const;
    };

    struct SweepSpec
    {
        SweepAxis axis = SweepAxis::utilization;
        std::vector<double> values;
        ExperimentParams fixed;
        int repetitions = 100;
        std::uint64_t base_seed = 1;
        PowerParams power;
        unsigned threads = 0; // 0: hardware concurrency

        /// The fixed parameters with the axis coordinate substituted.
        ExperimentParams at(double value) const;
        void validate() const;
    };

    struct PolicyRow
    {
        double value = 0.0;
        PolicyKind policy = PolicyKind::la_dvs;
        double energy = 0.0; // mean J
        double normalized = 0.0;
        double misses = 0.0;
        double wakes = 0.0;
        double failed_sleeps = 0.0;
        int runs = 0;
    };

    /// Invariant checks accumulated over every run of a sweep.
    struct SafetyTally
    {
        std::uint64_t runs = 0;
        std::uint64_t leakage_aware_misses = 0; // la_dvs + la_realloc
        std::uint64_t pure_dvs_misses = 0;
        std::uint64_t reallocations = 0;
        std::uint64_t realloc_dest_over_critical = 0;
        std::uint64_t realloc_dest_over_capacity = 0;
        std::uint64_t realloc_speed_increases = 0;
        std::uint64_t candidate_violations = 0;
        std::uint64_t ledger_imbalances = 0;
        double max_overrun = 0.0;

        bool clean() const;
        void merge(const SafetyTally& other);
    };

    struct SkippedPoint
    {
        double value = 0.0;
        int count = 0;
    };

    struct SweepResult
    {
        SweepAxis axis = SweepAxis::utilization;
        int repetitions = 0;
        std::vector<PolicyRow> rows; // value-major, policies in kComparedPolicies order
        std::vector<SkippedPoint> skipped;
        SafetyTally safety;

        const PolicyRow* find(double value, PolicyKind policy) const;
    };

    struct Instance
    {
        TaskSet tasks;
        Assignment assignment;
    };

    /// Draws a task set for the parameters and partitions it, resampling up to
    /// 1000 times when generation or the LTF partition fails.
    std::optional<Instance> draw_instance(const ExperimentParams& params, std::uint64_t seed);

    SimConfig make_sim_config(const ExperimentParams& params, PolicyKind policy, const PowerParams& power,
                              std::uint64_t seed);

    /// Tallies the invariants of one finished run.
    SafetyTally check_run(const SimResult& result, PolicyKind policy);

    /// Paired sweep: every repetition runs all compared policies on the same
    /// task set, partition and per-job execution draws. Output is independent
    /// of the thread count.
    SweepResult run_sweep(const SweepSpec& spec);

    /// Divides each mean energy by the la_dvs mean at the same axis value.
    /// Throws std::runtime_error when that mean is zero.
    SweepResult normalize(SweepResult result);

    /// Axis grid `START:STOP:STEP`, inclusive of STOP when it lies on the grid.
    std::vector<double> parse_range(std::string_view text);

    /// Default sweeps of the four published experiments (3 to 6).
    SweepSpec figure_preset(int figure, const PowerParams& power);

    void write_sweep_csv(const SweepResult& result, const SweepSpec& spec, std::ostream& out);

    /// Writes the CSV and a companion matplotlib script next to it. Throws
    /// std::runtime_error naming the path on I/O failure.
    void emit(const SweepResult& result, const SweepSpec& spec, const std::filesystem::path& path);
}
