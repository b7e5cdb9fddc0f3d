#include "lrsim/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

namespace lrsim
{
    namespace
    {
        constexpr int kMaxInstanceAttempts = 1000;
        constexpr double kRuleSlack = 1e-9;

        std::string fmt_num(double v)
        {
            return fmt::format("{:.10g}", v);
        }

        struct RunOutcome
        {
            bool skipped = false;
            std::array<double, 3> energy{};
            std::array<double, 3> misses{};
            std::array<double, 3> wakes{};
            std::array<double, 3> failed_sleeps{};
            SafetyTally safety;
        };

        RunOutcome run_repetition(const SweepSpec& spec, double value, int rep)
        {
            RunOutcome out;
            const ExperimentParams params = spec.at(value);
            const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(rep);
            const auto instance = draw_instance(params, seed);
            if (!instance)
            {
                out.skipped = true;
                return out;
            }
            for (std::size_t k = 0; k < kComparedPolicies.size(); ++k)
            {
                const SimConfig config = make_sim_config(params, kComparedPolicies[k], spec.power, seed);
                const SimResult result = run(config, instance->tasks, instance->assignment);
                out.energy[k] = result.ledger.total;
                out.misses[k] = static_cast<double>(result.ledger.deadline_misses);
                out.wakes[k] = static_cast<double>(result.ledger.wakes);
                out.failed_sleeps[k] = static_cast<double>(result.ledger.failed_sleeps);
                out.safety.merge(check_run(result, kComparedPolicies[k]));
            }
            return out;
        }

        std::string_view to_string(RatioDistribution d)
        {
            return d == RatioDistribution::fixed ? "fixed" : "centered_uniform";
        }
    }

    std::string_view to_string(SweepAxis axis)
    {
        switch (axis)
        {
        case SweepAxis::utilization: return "U";
        case SweepAxis::switch_energy: return "E_sw";
        case SweepAxis::cores: return "m";
        case SweepAxis::cc_ratio: return "cc_ratio";
        }
        return "?";
    }

    SweepAxis parse_sweep_axis(std::string_view text)
    {
        if (text == "U" || text == "u" || text == "util")
        {
            return SweepAxis::utilization;
        }
        if (text == "E_sw" || text == "esw" || text == "e_sw")
        {
            return SweepAxis::switch_energy;
        }
        if (text == "m" || text == "cores")
        {
            return SweepAxis::cores;
        }
        if (text == "cc_ratio" || text == "cc" || text == "cc-ratio")
        {
            return SweepAxis::cc_ratio;
        }
        throw std::invalid_argument(fmt::format("unknown sweep axis `{}` (U|E_sw|m|cc_ratio)", text));
    }

    void ExperimentParams::validate() const
    {
        if (!(utilization > 0 && utilization <= 1))
        {
            throw std::invalid_argument("utilization U must lie in (0, 1]");
        }
        if (!(switch_energy >= 0))
        {
            throw std::invalid_argument("switching energy must be nonnegative");
        }
        if (cores == 0)
        {
            throw std::invalid_argument("core count must be at least 1");
        }
        if (!(cc_ratio > 0 && cc_ratio <= 1))
        {
            throw std::invalid_argument("cc/WCET ratio must lie in (0, 1]");
        }
        if (tasks_min == 0 || tasks_min > tasks_max)
        {
            throw std::invalid_argument("invalid task count range");
        }
        if (!(periods.min > 0 && periods.min <= periods.max))
        {
            throw std::invalid_argument("invalid period range");
        }
        if (!(duration_ms > 0))
        {
            throw std::invalid_argument("duration must be positive");
        }
    }

    ExperimentParams SweepSpec::at(double value) const
    {
        ExperimentParams p = fixed;
        switch (axis)
        {
        case SweepAxis::utilization: p.utilization = value; break;
        case SweepAxis::switch_energy: p.switch_energy = value; break;
        case SweepAxis::cores: p.cores = static_cast<std::size_t>(std::llround(value)); break;
        case SweepAxis::cc_ratio: p.cc_ratio = value; break;
        }
        return p;
    }

    void SweepSpec::validate() const
    {
        if (values.empty())
        {
            throw std::invalid_argument("sweep needs at least one axis value");
        }
        for (std::size_t i = 1; i < values.size(); ++i)
        {
            if (!(values[i] > values[i - 1]))
            {
                throw std::invalid_argument("sweep values must be strictly increasing");
            }
        }
        if (axis == SweepAxis::cores)
        {
            for (const double v : values)
            {
                if (v < 1 || v != std::round(v))
                {
                    throw std::invalid_argument("core counts must be positive integers");
                }
            }
        }
        if (repetitions <= 0)
        {
            throw std::invalid_argument("repetitions must be positive");
        }
        for (const double v : values)
        {
            at(v).validate();
        }
        power.validate();
    }

    bool SafetyTally::clean() const
    {
        return leakage_aware_misses == 0 && realloc_dest_over_critical == 0 && realloc_dest_over_capacity == 0 &&
               realloc_speed_increases == 0 && candidate_violations == 0 && ledger_imbalances == 0;
    }

    void SafetyTally::merge(const SafetyTally& o)
    {
        runs += o.runs;
        leakage_aware_misses += o.leakage_aware_misses;
        pure_dvs_misses += o.pure_dvs_misses;
        reallocations += o.reallocations;
        realloc_dest_over_critical += o.realloc_dest_over_critical;
        realloc_dest_over_capacity += o.realloc_dest_over_capacity;
        realloc_speed_increases += o.realloc_speed_increases;
        candidate_violations += o.candidate_violations;
        ledger_imbalances += o.ledger_imbalances;
        max_overrun = std::max(max_overrun, o.max_overrun);
    }

    const PolicyRow* SweepResult::find(double value, PolicyKind policy) const
    {
        for (const auto& row : rows)
        {
            if (row.value == value && row.policy == policy)
            {
                return &row;
            }
        }
        return nullptr;
    }

    std::optional<Instance> draw_instance(const ExperimentParams& params, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> count(params.tasks_min, params.tasks_max);
        const double u_total = params.utilization * static_cast<double>(params.cores);
        for (int attempt = 0; attempt < kMaxInstanceAttempts; ++attempt)
        {
            const std::size_t n = count(rng);
            const std::uint64_t set_seed = rng();
            if (u_total > static_cast<double>(n))
            {
                continue;
            }
            try
            {
                Instance inst;
                inst.tasks = generate_task_set(n, u_total, params.periods, set_seed);
                inst.assignment = ltf_partition(inst.tasks, params.cores);
                return inst;
            }
            catch (const PartitionInfeasible&)
            {
            }
            catch (const std::runtime_error&)
            {
            }
        }
        return std::nullopt;
    }

    SimConfig make_sim_config(const ExperimentParams& params, PolicyKind policy, const PowerParams& power,
                              std::uint64_t seed)
    {
        SimConfig config;
        config.cores = params.cores;
        config.duration = ms_to_ns(params.duration_ms);
        config.switch_energy = params.switch_energy;
        config.mean_ratio = params.cc_ratio;
        config.ratio_distribution = params.ratio_distribution;
        config.policy = PolicyConfig{policy, params.bonus, params.s_rule};
        config.seed = seed;
        config.power = power;
        return config;
    }

    SafetyTally check_run(const SimResult& result, PolicyKind policy)
    {
        SafetyTally t;
        t.runs = 1;
        (policy == PolicyKind::pure_dvs ? t.pure_dvs_misses : t.leakage_aware_misses) +=
            result.ledger.deadline_misses;
        const double crit = result.speeds.critical_scale;
        for (const auto& rec : result.stats.reallocations)
        {
            ++t.reallocations;
            if (rec.dest_dynamic_after > crit + kRuleSlack)
            {
                ++t.realloc_dest_over_critical;
            }
            if (rec.dest_static_after > 1.0 + kRuleSlack)
            {
                ++t.realloc_dest_over_capacity;
            }
            if (rec.speed_after > rec.speed_before)
            {
                ++t.realloc_speed_increases;
            }
        }
        t.candidate_violations = result.stats.candidate_violations;
        const auto& l = result.ledger;
        bool balanced = l.total == l.sum_of_parts() && l.switch_energy >= 0 && l.total >= 0;
        for (std::size_t c = 0; c < l.busy.size(); ++c)
        {
            balanced = balanced && l.busy[c] >= 0 && l.idle_active[c] >= 0;
        }
        t.ledger_imbalances = balanced ? 0 : 1;
        t.max_overrun = result.stats.max_overrun;
        return t;
    }

    SweepResult run_sweep(const SweepSpec& spec)
    {
        spec.validate();
        const std::size_t reps = static_cast<std::size_t>(spec.repetitions);
        const std::size_t jobs = spec.values.size() * reps;
        std::vector<RunOutcome> outcomes(jobs);

        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t j = next++; j < jobs; j = next++)
            {
                outcomes[j] = run_repetition(spec, spec.values[j / reps], static_cast<int>(j % reps));
            }
        };
        unsigned threads = spec.threads != 0 ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
        threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
        {
            std::vector<std::jthread> pool;
            for (unsigned i = 1; i < threads; ++i)
            {
                pool.emplace_back(worker);
            }
            worker();
        }

        SweepResult result;
        result.axis = spec.axis;
        result.repetitions = spec.repetitions;
        for (std::size_t v = 0; v < spec.values.size(); ++v)
        {
            std::array<PolicyRow, 3> acc{};
            int skipped = 0;
            for (std::size_t r = 0; r < reps; ++r)
            {
                const RunOutcome& o = outcomes[v * reps + r];
                if (o.skipped)
                {
                    ++skipped;
                    continue;
                }
                for (std::size_t k = 0; k < 3; ++k)
                {
                    acc[k].energy += o.energy[k];
                    acc[k].misses += o.misses[k];
                    acc[k].wakes += o.wakes[k];
                    acc[k].failed_sleeps += o.failed_sleeps[k];
                    ++acc[k].runs;
                }
                result.safety.merge(o.safety);
            }
            if (skipped > 0)
            {
                result.skipped.push_back({spec.values[v], skipped});
            }
            if (acc[0].runs == 0)
            {
                continue;
            }
            for (std::size_t k = 0; k < 3; ++k)
            {
                PolicyRow row = acc[k];
                const double n = row.runs;
                row.value = spec.values[v];
                row.policy = kComparedPolicies[k];
                row.energy /= n;
                row.misses /= n;
                row.wakes /= n;
                row.failed_sleeps /= n;
                result.rows.push_back(row);
            }
        }
        return normalize(std::move(result));
    }

    SweepResult normalize(SweepResult result)
    {
        for (auto& row : result.rows)
        {
            const PolicyRow* base = result.find(row.value, PolicyKind::la_dvs);
            if (base == nullptr)
            {
                throw std::runtime_error(fmt::format("no la_dvs result at {} = {}", to_string(result.axis), row.value));
            }
            if (base->energy == 0)
            {
                throw std::runtime_error(
                    fmt::format("la_dvs mean energy is zero at {} = {}", to_string(result.axis), row.value));
            }
            row.normalized = row.energy / base->energy;
        }
        return result;
    }

    std::vector<double> parse_range(std::string_view text)
    {
        std::array<double, 3> parts{};
        std::size_t field = 0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= text.size(); ++i)
        {
            if (i == text.size() || text[i] == ':')
            {
                if (field >= 3)
                {
                    throw std::invalid_argument(fmt::format("range `{}` must be START:STOP:STEP", text));
                }
                const std::string piece(text.substr(start, i - start));
                try
                {
                    std::size_t used = 0;
                    parts[field] = std::stod(piece, &used);
                    if (used != piece.size())
                    {
                        throw std::invalid_argument(piece);
                    }
                }
                catch (const std::exception&)
                {
                    throw std::invalid_argument(fmt::format("bad number `{}` in range `{}`", piece, text));
                }
                ++field;
                start = i + 1;
            }
        }
        if (field != 3)
        {
            throw std::invalid_argument(fmt::format("range `{}` must be START:STOP:STEP", text));
        }
        const auto [lo, hi, step] = parts;
        if (!(step > 0) || hi < lo)
        {
            throw std::invalid_argument(fmt::format("range `{}` needs STEP > 0 and STOP >= START", text));
        }
        const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(count));
        for (long i = 0; i < count; ++i)
        {
            // Rounded so that 0.1 + 2 * 0.1 prints and compares as 0.3.
            values.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
        }
        return values;
    }

    SweepSpec figure_preset(int figure, const PowerParams& power)
    {
        SweepSpec spec;
        spec.power = power;
        spec.fixed = ExperimentParams{};
        switch (figure)
        {
        case 3:
            spec.axis = SweepAxis::utilization;
            spec.values = parse_range("0.1:1.0:0.1");
            break;
        case 4:
            spec.axis = SweepAxis::switch_energy;
            spec.values = parse_range("0:0.001:0.0001");
            break;
        case 5:
            spec.axis = SweepAxis::cc_ratio;
            spec.values = parse_range("0.05:1:0.05");
            break;
        case 6:
            spec.axis = SweepAxis::cores;
            spec.values = {2, 4, 8, 16};
            break;
        default:
            throw std::invalid_argument(fmt::format("no preset for figure {}", figure));
        }
        return spec;
    }

    void write_sweep_csv(const SweepResult& result, const SweepSpec& spec, std::ostream& out)
    {
        const ExperimentParams& f = spec.fixed;
        out << "# lrsim sweep\n";
        out << "# axis=" << to_string(spec.axis) << " values=";
        for (std::size_t i = 0; i < spec.values.size(); ++i)
        {
            out << (i ? ";" : "") << fmt_num(spec.values[i]);
        }
        out << '\n';
        out << fmt::format("# repetitions={} base_seed={}\n", spec.repetitions, spec.base_seed);
        out << fmt::format("# util={} esw_j={} cores={} cc_ratio={} tasks={}:{} periods_ms={}:{} duration_ms={}\n",
                           fmt_num(f.utilization), fmt_num(f.switch_energy), f.cores, fmt_num(f.cc_ratio),
                           f.tasks_min, f.tasks_max, fmt_num(f.periods.min), fmt_num(f.periods.max),
                           fmt_num(f.duration_ms));
        out << fmt::format("# ratio_distribution={} realloc.bonus={} realloc.s_rule={}\n",
                           to_string(f.ratio_distribution), to_string(f.bonus), to_string(f.s_rule));
        const PowerParams& p = spec.power;
        out << fmt::format("# constants c_eff={} l_g={} l_d={} k1={} k2={} k3={} k4={} k5={} k6={} vth1={} "
                           "epsilon={} i_j={} v_bs={} vdd_min={} vdd_max={}\n",
                           fmt_num(p.c_eff), fmt_num(p.l_g), fmt_num(p.l_d), fmt_num(p.k1), fmt_num(p.k2),
                           fmt_num(p.k3), fmt_num(p.k4), fmt_num(p.k5), fmt_num(p.k6), fmt_num(p.vth1),
                           fmt_num(p.epsilon), fmt_num(p.i_j), fmt_num(p.v_bs), fmt_num(p.vdd_min),
                           fmt_num(p.vdd_max));
        for (const auto& s : result.skipped)
        {
            out << fmt::format("# skipped value={} repetitions={} (no feasible partition)\n", fmt_num(s.value),
                               s.count);
        }
        out << "axis,value,policy,energy_j,normalized,misses,wakes,failed_sleeps,runs\n";
        for (const auto& row : result.rows)
        {
            out << fmt::format("{},{},{},{},{},{},{},{},{}\n", to_string(result.axis), fmt_num(row.value),
                               to_string(row.policy), fmt_num(row.energy), fmt_num(row.normalized),
                               fmt_num(row.misses), fmt_num(row.wakes), fmt_num(row.failed_sleeps), row.runs);
        }
    }

    void emit(const SweepResult& result, const SweepSpec& spec, const std::filesystem::path& path)
    {
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
            {
                throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
            }
            write_sweep_csv(result, spec, out);
            if (!out.flush())
            {
                throw std::runtime_error(fmt::format("write to {} failed", path.string()));
            }
        }

        std::filesystem::path script = path;
        script.replace_extension(".plot.py");
        std::ofstream out(script, std::ios::binary);
        if (!out)
        {
            throw std::runtime_error(fmt::format("cannot open {} for writing", script.string()));
        }
        out << "# Plots normalized energy per policy from " << path.filename().string() << "\n"
            << "# columns: axis,value,policy,energy_j,normalized,misses,wakes,failed_sleeps,runs\n"
            << "import csv, sys\n"
            << "import matplotlib.pyplot as plt\n\n"
            << "src = sys.argv[1] if len(sys.argv) > 1 else '" << path.filename().string() << "'\n"
            << "series = {}\n"
            << "with open(src) as fh:\n"
            << "    rows = csv.DictReader(line for line in fh if not line.startswith('#'))\n"
            << "    for r in rows:\n"
            << "        series.setdefault(r['policy'], []).append((float(r['value']), float(r['normalized'])))\n"
            << "        axis = r['axis']\n"
            << "for policy, pts in series.items():\n"
            << "    xs, ys = zip(*pts)\n"
            << "    plt.plot(xs, ys, marker='o', label=policy)\n"
            << "plt.xlabel(axis)\n"
            << "plt.ylabel('energy normalized to la_dvs')\n"
            << "plt.legend()\n"
            << "plt.grid(True)\n"
            << "plt.savefig(src.rsplit('.', 1)[0] + '.png', dpi=150)\n";
        if (!out.flush())
        {
            throw std::runtime_error(fmt::format("write to {} failed", script.string()));
        }
    }
}
