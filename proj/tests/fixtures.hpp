#pragma once

#include "lrsim/partitioner.hpp"
#include "lrsim/power_model.hpp"
#include "lrsim/workload.hpp"

#include <filesystem>

namespace lrsim::test
{
    inline std::filesystem::path data_dir()
    {
        return LRSIM_DATA_DIR;
    }

    inline const PowerParams& calibrated()
    {
        static const PowerParams params = load_power_params(data_dir() / "constants_70nm.txt");
        return params;
    }

    inline Task make_task(int id, double period_ms, double wcet_ms)
    {
        return Task{id, ms_to_ns(period_ms), wcet_ms * static_cast<double>(kNsPerMs)};
    }

    /// Three-task motivational example: tau1(2, 0.6), tau2(4, 0.4), tau3(2, 0.2), in ms.
    inline TaskSet motivational_set()
    {
        TaskSet set;
        set.tasks = {make_task(1, 2, 0.6), make_task(2, 4, 0.4), make_task(3, 2, 0.2)};
        return set;
    }
}
