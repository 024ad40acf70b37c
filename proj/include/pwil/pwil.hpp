#pragma once

#include "pwil/agent.hpp"
#include "pwil/config.hpp"
#include "pwil/envs.hpp"
#include "pwil/harness.hpp"
#include "pwil/io.hpp"
#include "pwil/metric.hpp"
#include "pwil/ot_exact.hpp"
#include "pwil/rewarder.hpp"
#include "pwil/types.hpp"
