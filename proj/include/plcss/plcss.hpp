#pragma once

#include "plcss/generator.hpp"
#include "plcss/mac_sim.hpp"
#include "plcss/metrics.hpp"
#include "plcss/prng.hpp"
#include "plcss/routing.hpp"
#include "plcss/spectrum_sharing.hpp"
#include "plcss/tonemap.hpp"
#include "plcss/trace_io.hpp"
