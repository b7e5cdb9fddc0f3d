#pragma once

#include <filesystem>
#include <iosfwd>

namespace lrsim
{
    /// CMOS technology constants for the dynamic/static power equations and the
    /// voltage-frequency relation. All values are SI.
    struct PowerParams
    {
        double c_eff = 0.0;   // switched capacitance per cycle (F)
        double l_g = 0.0;     // number of components in the circuit
        double l_d = 0.0;
        double k1 = 0.0;
        double k2 = 0.0;
        double k3 = 0.0;
        double k4 = 0.0;
        double k5 = 0.0;
        double k6 = 0.0;
        double vth1 = 0.0;    // base threshold voltage (V)
        double epsilon = 0.0; // exponent of the frequency equation
        double i_j = 0.0;     // reverse-bias junction current (A)
        double v_bs = 0.0;    // body bias (V), fixed
        double vdd_min = 0.0;
        double vdd_max = 0.0;

        /// Throws std::invalid_argument if the constants violate the model's
        /// preconditions (non-positive scale factors, empty voltage range, or a
        /// frequency map that is not strictly positive and increasing).
        void validate() const;
    };

    struct DerivedSpeeds
    {
        double f_max = 0.0;          // Hz
        double f_min = 0.0;          // Hz
        double f_cri = 0.0;          // Hz
        double critical_scale = 0.0; // f_cri / f_max

        double min_scale() const noexcept { return f_min / f_max; }
    };

    /// Loads a `name = value` constants file (SI units, `#` comments).
    /// Every key of PowerParams must be present exactly once; unknown keys are
    /// rejected. Throws std::runtime_error with the file path on any problem.
    PowerParams load_power_params(const std::filesystem::path& path);
    PowerParams parse_power_params(std::istream& in, const std::string& source_name);

    double threshold_voltage(const PowerParams& params, double vdd);
    double frequency_of_vdd(const PowerParams& params, double vdd);
    double vdd_of_frequency(const PowerParams& params, double f);

    double dynamic_power(const PowerParams& params, double vdd, double f);
    double static_power(const PowerParams& params, double vdd);

    /// Power of one active core running at normalized speed `s` (f = s * f_max).
    double total_power_at_speed(const PowerParams& params, const DerivedSpeeds& speeds, double s);

    /// Energy per cycle (J) at normalized speed `s`.
    double energy_per_cycle(const PowerParams& params, const DerivedSpeeds& speeds, double s);

    /// Normalized speed minimizing energy per cycle on [f_min/f_max, 1].
    double critical_speed(const PowerParams& params, const DerivedSpeeds& speeds);

    /// f_max, f_min and the critical speed for a parameter set.
    DerivedSpeeds derive_speeds(const PowerParams& params);

    /// Break-even idle length E_sw / P_idle in seconds, where P_idle is the
    /// active power at the minimum speed.
    double sleep_threshold(const PowerParams& params, const DerivedSpeeds& speeds, double e_sw);
}
