#include "lrsim/power_model.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lrsim
{
    namespace
    {
        constexpr double kInversionTolerance = 1e-12; // relative to f_max
        constexpr double kGoldenTolerance = 1e-4;    // normalized speed

        void require_range(const PowerParams& params, double vdd)
        {
            // Small slack so endpoints produced by arithmetic still count as inside.
            const double slack = 1e-12 * params.vdd_max;
            if (!(vdd >= params.vdd_min - slack && vdd <= params.vdd_max + slack))
            {
                throw std::domain_error(fmt::format("supply voltage {} V outside [{}, {}]", vdd, params.vdd_min,
                                                    params.vdd_max));
            }
        }

        std::string trim(const std::string& s)
        {
            const auto first = s.find_first_not_of(" \t\r");
            if (first == std::string::npos)
            {
                return {};
            }
            const auto last = s.find_last_not_of(" \t\r");
            return s.substr(first, last - first + 1);
        }

        struct Field
        {
            const char* key;
            double PowerParams::*member;
        };

        constexpr std::array<Field, 15> kFields{{
            {"c_eff", &PowerParams::c_eff},
            {"l_g", &PowerParams::l_g},
            {"l_d", &PowerParams::l_d},
            {"k1", &PowerParams::k1},
            {"k2", &PowerParams::k2},
            {"k3", &PowerParams::k3},
            {"k4", &PowerParams::k4},
            {"k5", &PowerParams::k5},
            {"k6", &PowerParams::k6},
            {"vth1", &PowerParams::vth1},
            {"epsilon", &PowerParams::epsilon},
            {"i_j", &PowerParams::i_j},
            {"v_bs", &PowerParams::v_bs},
            {"vdd_min", &PowerParams::vdd_min},
            {"vdd_max", &PowerParams::vdd_max},
        }};
    }

    void PowerParams::validate() const
    {
        if (!(c_eff > 0 && l_d > 0 && k6 > 0 && epsilon > 0))
        {
            throw std::invalid_argument("c_eff, l_d, k6 and epsilon must be positive");
        }
        if (!(l_g >= 0))
        {
            throw std::invalid_argument("l_g must be nonnegative");
        }
        if (!(vdd_min > 0 && vdd_min < vdd_max))
        {
            throw std::invalid_argument(fmt::format("invalid supply range [{}, {}]", vdd_min, vdd_max));
        }
        // The overdrive vdd - V_th is affine in vdd with slope 1 + k1, so it is
        // positive and increasing on the whole range iff it is at vdd_min.
        if (!(1.0 + k1 > 0))
        {
            throw std::invalid_argument("frequency map must increase with vdd (need k1 > -1)");
        }
        if (!(vdd_min - threshold_voltage(*this, vdd_min) > 0))
        {
            throw std::invalid_argument("supply voltage at vdd_min does not exceed the threshold voltage");
        }
    }

    PowerParams parse_power_params(std::istream& in, const std::string& source_name)
    {
        std::map<std::string, double> values;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos)
            {
                line.erase(hash);
            }
            line = trim(line);
            if (line.empty())
            {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
            {
                throw std::runtime_error(fmt::format("{}:{}: expected `name = value`", source_name, line_no));
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string text = trim(line.substr(eq + 1));
            double value = 0.0;
            try
            {
                std::size_t used = 0;
                value = std::stod(text, &used);
                if (used != text.size())
                {
                    throw std::invalid_argument(text);
                }
            }
            catch (const std::exception&)
            {
                throw std::runtime_error(fmt::format("{}:{}: bad number `{}`", source_name, line_no, text));
            }
            if (!values.emplace(key, value).second)
            {
                throw std::runtime_error(fmt::format("{}:{}: duplicate key `{}`", source_name, line_no, key));
            }
        }

        PowerParams params;
        for (const auto& field : kFields)
        {
            const auto it = values.find(field.key);
            if (it == values.end())
            {
                throw std::runtime_error(fmt::format("{}: missing key `{}`", source_name, field.key));
            }
            params.*field.member = it->second;
            values.erase(it);
        }
        if (!values.empty())
        {
            throw std::runtime_error(fmt::format("{}: unknown key `{}`", source_name, values.begin()->first));
        }
        try
        {
            params.validate();
        }
        catch (const std::invalid_argument& e)
        {
            throw std::runtime_error(fmt::format("{}: {}", source_name, e.what()));
        }
        return params;
    }

    PowerParams load_power_params(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw std::runtime_error(fmt::format("cannot open constants file {}", path.string()));
        }
        return parse_power_params(in, path.string());
    }

    double threshold_voltage(const PowerParams& params, double vdd)
    {
        return params.vth1 - params.k1 * vdd - params.k2 * params.v_bs;
    }

    double frequency_of_vdd(const PowerParams& params, double vdd)
    {
        require_range(params, vdd);
        const double overdrive = vdd - threshold_voltage(params, vdd);
        if (!(overdrive > 0))
        {
            throw std::domain_error(fmt::format("vdd {} V does not exceed the threshold voltage", vdd));
        }
        return std::pow(overdrive, params.epsilon) / (params.l_d * params.k6);
    }

    double vdd_of_frequency(const PowerParams& params, double f)
    {
        const double f_lo = frequency_of_vdd(params, params.vdd_min);
        const double f_hi = frequency_of_vdd(params, params.vdd_max);
        const double slack = 1e-12 * f_hi;
        if (!(f >= f_lo - slack && f <= f_hi + slack))
        {
            throw std::domain_error(fmt::format("frequency {} Hz outside [{}, {}]", f, f_lo, f_hi));
        }
        if (f >= f_hi)
        {
            return params.vdd_max;
        }
        if (f <= f_lo)
        {
            return params.vdd_min;
        }
        double lo = params.vdd_min;
        double hi = params.vdd_max;
        // Bisection on the monotone map; stop on frequency residual or when the
        // bracket stops shrinking in floating point.
        for (int iter = 0; iter < 200; ++iter)
        {
            const double mid = 0.5 * (lo + hi);
            const double fm = frequency_of_vdd(params, mid);
            if (std::abs(fm - f) <= kInversionTolerance * f_hi || mid == lo || mid == hi)
            {
                return mid;
            }
            (fm < f ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    double dynamic_power(const PowerParams& params, double vdd, double f)
    {
        if (vdd < 0 || f < 0)
        {
            throw std::domain_error("dynamic_power requires nonnegative vdd and f");
        }
        return params.c_eff * vdd * vdd * f;
    }

    double static_power(const PowerParams& params, double vdd)
    {
        require_range(params, vdd);
        const double i_subn = params.k3 * std::exp(params.k4 * vdd) * std::exp(params.k5 * params.v_bs);
        return params.l_g * (vdd * i_subn + std::abs(params.v_bs) * params.i_j);
    }

    double total_power_at_speed(const PowerParams& params, const DerivedSpeeds& speeds, double s)
    {
        const double s_min = speeds.min_scale();
        if (!(s >= s_min * (1 - 1e-12) && s <= 1.0 + 1e-12))
        {
            throw std::domain_error(fmt::format("normalized speed {} outside [{}, 1]", s, s_min));
        }
        const double f = s * speeds.f_max;
        const double vdd = vdd_of_frequency(params, f);
        return dynamic_power(params, vdd, f) + static_power(params, vdd);
    }

    double energy_per_cycle(const PowerParams& params, const DerivedSpeeds& speeds, double s)
    {
        return total_power_at_speed(params, speeds, s) / (s * speeds.f_max);
    }

    double critical_speed(const PowerParams& params, const DerivedSpeeds& speeds)
    {
        // Golden-section search; energy per cycle is unimodal for physical constants.
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = speeds.min_scale();
        double b = 1.0;
        double c = b - inv_phi * (b - a);
        double d = a + inv_phi * (b - a);
        double fc = energy_per_cycle(params, speeds, c);
        double fd = energy_per_cycle(params, speeds, d);
        while (b - a > kGoldenTolerance)
        {
            if (fc < fd)
            {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = energy_per_cycle(params, speeds, c);
            }
            else
            {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = energy_per_cycle(params, speeds, d);
            }
        }
        const double mid = 0.5 * (a + b);
        // The minimum may sit on an endpoint (e.g. no leakage).
        double best = mid;
        double best_e = energy_per_cycle(params, speeds, mid);
        for (const double edge : {speeds.min_scale(), 1.0})
        {
            const double e = energy_per_cycle(params, speeds, edge);
            if (e < best_e && std::abs(edge - mid) <= 2 * kGoldenTolerance)
            {
                best = edge;
                best_e = e;
            }
        }
        return best;
    }

    DerivedSpeeds derive_speeds(const PowerParams& params)
    {
        params.validate();
        DerivedSpeeds speeds;
        speeds.f_max = frequency_of_vdd(params, params.vdd_max);
        speeds.f_min = frequency_of_vdd(params, params.vdd_min);
        speeds.critical_scale = critical_speed(params, speeds);
        speeds.f_cri = speeds.critical_scale * speeds.f_max;
        return speeds;
    }

    double sleep_threshold(const PowerParams& params, const DerivedSpeeds& speeds, double e_sw)
    {
        if (e_sw < 0)
        {
            throw std::domain_error("switching energy must be nonnegative");
        }
        return e_sw / total_power_at_speed(params, speeds, speeds.min_scale());
    }
}
