#pragma once

#include "vanetsim/errors.hpp"
#include "vanetsim/geometry.hpp"
#include "vanetsim/metrics/metrics.hpp"
#include "vanetsim/mobility/fcd.hpp"
#include "vanetsim/mobility/provider.hpp"
#include "vanetsim/mobility/types.hpp"
#include "vanetsim/protocols/discovery.hpp"
#include "vanetsim/protocols/fog.hpp"
#include "vanetsim/protocols/gateways.hpp"
#include "vanetsim/protocols/simulation.hpp"
#include "vanetsim/protocols/types.hpp"
#include "vanetsim/radio/load.hpp"
#include "vanetsim/radio/radio.hpp"
#include "vanetsim/scenario/cli.hpp"
#include "vanetsim/scenario/config.hpp"
#include "vanetsim/scenario/sweep.hpp"
#include "vanetsim/sim/rng.hpp"
#include "vanetsim/sim/scheduler.hpp"
#include "vanetsim/sim/time.hpp"
#include "vanetsim/version.hpp"
