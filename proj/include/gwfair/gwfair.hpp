#pragma once

#include "gwfair/error.hpp"
#include "gwfair/fairness.hpp"
#include "gwfair/network.hpp"
#include "gwfair/oracle.hpp"
#include "gwfair/erica.hpp"
#include "gwfair/sim/trace.hpp"
#include "gwfair/sim/engine.hpp"
#include "gwfair/experiment/spec.hpp"
#include "gwfair/experiment/builtins.hpp"
#include "gwfair/experiment/config.hpp"
#include "gwfair/experiment/runner.hpp"
