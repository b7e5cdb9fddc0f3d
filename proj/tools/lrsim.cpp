// Command-line driver: single simulations and experiment sweeps.

#include "lrsim/engine.hpp"
#include "lrsim/harness.hpp"
#include "lrsim/partitioner.hpp"
#include "lrsim/policies.hpp"
#include "lrsim/power_model.hpp"
#include "lrsim/workload.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace
{
    std::pair<double, double> parse_pair(const std::string& text, const char* what)
    {
        const auto colon = text.find(':');
        if (colon == std::string::npos)
        {
            throw std::invalid_argument(fmt::format("{} must be MIN:MAX, got `{}`", what, text));
        }
        try
        {
            return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
        }
        catch (const std::exception&)
        {
            throw std::invalid_argument(fmt::format("{} must be MIN:MAX, got `{}`", what, text));
        }
    }

    struct CommonOptions
    {
        std::string constants = LRSIM_DEFAULT_CONSTANTS;
        double util = 0.3;
        double esw = 0.5e-3;
        std::size_t cores = 2;
        double cc_ratio = 0.5;
        std::string tasks = "10:20";
        std::string periods = "10:100";
        double duration = 10'000.0;
        std::uint64_t seed = 1;
        std::string bonus = "scaled";
        std::string s_rule = "prose";
        std::string ratio_dist = "centered_uniform";

        void attach(CLI::App* app)
        {
            app->add_option("--constants", constants, "technology constants file")->capture_default_str();
            app->add_option("--cores", cores, "core count m")->capture_default_str();
            app->add_option("--util", util, "average utilization U = U_tot / m")->capture_default_str();
            app->add_option("--esw", esw, "switching overhead E_sw (J)")->capture_default_str();
            app->add_option("--cc-ratio", cc_ratio, "mean actual/WCET ratio")->capture_default_str();
            app->add_option("--tasks", tasks, "task count range N_MIN:N_MAX")->capture_default_str();
            app->add_option("--periods", periods, "period range MS_MIN:MS_MAX")->capture_default_str();
            app->add_option("--duration", duration, "simulated time per run (ms)")->capture_default_str();
            app->add_option("--seed", seed, "base seed")->capture_default_str();
            app->add_option("--bonus", bonus, "shift-benefit bonus: scaled|literal")->capture_default_str();
            app->add_option("--s-rule", s_rule, "candidate-set rule: prose|pseudocode")->capture_default_str();
            app->add_option("--ratio-dist", ratio_dist, "cc/W distribution: centered_uniform|fixed")
                ->capture_default_str();
        }

        lrsim::ExperimentParams params() const
        {
            lrsim::ExperimentParams p;
            p.utilization = util;
            p.switch_energy = esw;
            p.cores = cores;
            p.cc_ratio = cc_ratio;
            const auto [n_lo, n_hi] = parse_pair(tasks, "--tasks");
            p.tasks_min = static_cast<std::size_t>(n_lo);
            p.tasks_max = static_cast<std::size_t>(n_hi);
            const auto [p_lo, p_hi] = parse_pair(periods, "--periods");
            p.periods = {p_lo, p_hi};
            p.duration_ms = duration;
            p.bonus = lrsim::parse_bonus_mode(bonus);
            p.s_rule = lrsim::parse_candidate_rule(s_rule);
            if (ratio_dist == "fixed")
            {
                p.ratio_distribution = lrsim::RatioDistribution::fixed;
            }
            else if (ratio_dist != "centered_uniform")
            {
                throw std::invalid_argument(fmt::format("unknown ratio distribution `{}`", ratio_dist));
            }
            p.validate();
            return p;
        }
    };

    struct Overrides
    {
        std::optional<double> critical_scale;
        std::optional<double> sleep_threshold_ms;
    };

    int simulate(const CommonOptions& opts, const std::string& policy, const std::string& taskset_path,
                 const std::string& trace_path, const Overrides& overrides)
    {
        const lrsim::PowerParams power = lrsim::load_power_params(opts.constants);
        const lrsim::ExperimentParams params = opts.params();

        lrsim::Instance instance;
        if (!taskset_path.empty())
        {
            instance.tasks = lrsim::read_task_set_csv(std::filesystem::path(taskset_path));
            instance.assignment = lrsim::ltf_partition(instance.tasks, params.cores);
        }
        else
        {
            auto drawn = lrsim::draw_instance(params, opts.seed);
            if (!drawn)
            {
                std::cerr << "error: no feasible task set for these parameters\n";
                return 1;
            }
            instance = std::move(*drawn);
        }

        lrsim::SimConfig config =
            lrsim::make_sim_config(params, lrsim::parse_policy_kind(policy), power, opts.seed);
        config.record_trace = !trace_path.empty();
        config.critical_scale_override = overrides.critical_scale;
        if (overrides.sleep_threshold_ms)
        {
            config.sleep_threshold_override = lrsim::ms_to_ns(*overrides.sleep_threshold_ms);
        }
        const lrsim::SimResult result = lrsim::run(config, instance.tasks, instance.assignment);

        if (!trace_path.empty())
        {
            std::ofstream out(trace_path, std::ios::binary);
            if (!out)
            {
                throw std::runtime_error(fmt::format("cannot open {} for writing", trace_path));
            }
            lrsim::write_trace_csv(result.trace, out);
        }

        const auto& l = result.ledger;
        std::cout << fmt::format("policy            {}\n", policy);
        std::cout << fmt::format("tasks             {} (U_tot = {:.4f})\n", instance.tasks.size(),
                                 instance.tasks.total_utilization());
        std::cout << fmt::format("critical scale    {:.4f}\n", result.speeds.critical_scale);
        std::cout << fmt::format("sleep threshold   {:.6f} ms\n", lrsim::ns_to_ms(result.sleep_threshold));
        for (std::size_t c = 0; c < l.busy.size(); ++c)
        {
            std::cout << fmt::format("core {:<3}          busy {:.6g} J, idle-active {:.6g} J, U = {:.4f}\n", c,
                                     l.busy[c], l.idle_active[c], instance.assignment.utilization[c]);
        }
        std::cout << fmt::format("switch energy     {:.6g} J ({} wakes)\n", l.switch_energy, l.wakes);
        std::cout << fmt::format("failed sleeps     {}\n", l.failed_sleeps);
        std::cout << fmt::format("deadline misses   {}\n", l.deadline_misses);
        std::cout << fmt::format("reallocations     {}\n", result.stats.reallocations.size());
        std::cout << fmt::format("total energy      {:.9g} J\n", l.total);
        return 0;
    }

    int sweep(const CommonOptions& opts, const std::string& axis_spec, int figure, int runs, unsigned threads,
              const std::string& out_path)
    {
        const lrsim::PowerParams power = lrsim::load_power_params(opts.constants);
        lrsim::SweepSpec spec;
        if (figure != 0)
        {
            spec = lrsim::figure_preset(figure, power);
        }
        spec.power = power;
        spec.fixed = opts.params();
        if (!axis_spec.empty())
        {
            const auto eq = axis_spec.find('=');
            if (eq == std::string::npos)
            {
                throw std::invalid_argument("--sweep must be AXIS=START:STOP:STEP");
            }
            spec.axis = lrsim::parse_sweep_axis(axis_spec.substr(0, eq));
            spec.values = lrsim::parse_range(axis_spec.substr(eq + 1));
        }
        else if (figure == 0)
        {
            throw std::invalid_argument("sweep needs --sweep AXIS=START:STOP:STEP or --figure N");
        }
        spec.repetitions = runs;
        spec.base_seed = opts.seed;
        spec.threads = threads;

        const lrsim::SweepResult result = lrsim::run_sweep(spec);
        if (out_path.empty())
        {
            lrsim::write_sweep_csv(result, spec, std::cout);
        }
        else
        {
            lrsim::emit(result, spec, out_path);
        }
        if (!result.safety.clean())
        {
            std::cerr << fmt::format("warning: invariant violations (misses {}, rule {}/{}, speed {}, S {}, "
                                     "ledger {})\n",
                                     result.safety.leakage_aware_misses, result.safety.realloc_dest_over_critical,
                                     result.safety.realloc_dest_over_capacity, result.safety.realloc_speed_increases,
                                     result.safety.candidate_violations, result.safety.ledger_imbalances);
        }
        return 0;
    }
}

int main(int argc, char** argv)
{
    CLI::App app{"Leakage-aware reallocation simulator for partitioned EDF on multicore DVS processors"};
    app.require_subcommand(1);

    CommonOptions sim_opts;
    std::string policy = "la_realloc";
    std::string taskset;
    std::string trace;
    auto* sim = app.add_subcommand("simulate", "run one simulation");
    sim_opts.attach(sim);
    sim->add_option("--policy", policy, "pure_dvs|la_dvs|la_realloc")->capture_default_str();
    sim->add_option("--taskset", taskset, "task set CSV (id,period_ms,wcet_ms) instead of a random draw");
    sim->add_option("--trace", trace, "write the event trace CSV here");
    Overrides overrides;
    sim->add_option("--critical-scale", overrides.critical_scale, "use this critical scale instead of the derived one");
    sim->add_option("--sleep-threshold-ms", overrides.sleep_threshold_ms,
                    "use this sleep threshold instead of E_sw / P_idle");

    CommonOptions sweep_opts;
    std::string axis;
    int figure = 0;
    int runs = 100;
    unsigned threads = 0;
    std::string out;
    auto* sw = app.add_subcommand("sweep", "run a paired parameter sweep over all three policies");
    sweep_opts.attach(sw);
    sw->add_option("--sweep", axis, "AXIS=START:STOP:STEP with AXIS in U|E_sw|m|cc_ratio");
    sw->add_option("--figure", figure, "use the axis grid of experiment 3, 4, 5 or 6");
    sw->add_option("--runs", runs, "repetitions per axis value")->capture_default_str();
    sw->add_option("--threads", threads, "worker threads (0: all cores)")->capture_default_str();
    sw->add_option("--out", out, "CSV path (a .plot.py script is written next to it)");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (sim->parsed())
        {
            return simulate(sim_opts, policy, taskset, trace, overrides);
        }
        return sweep(sweep_opts, axis, figure, runs, threads, out);
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
