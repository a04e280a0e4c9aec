#pragma once

#include "belief_sim/exact.hpp"
#include "belief_sim/forward.hpp"
#include "belief_sim/harness.hpp"
#include "belief_sim/importance.hpp"
#include "belief_sim/mcmc.hpp"
#include "belief_sim/network.hpp"
#include "belief_sim/network_io.hpp"
#include "belief_sim/report.hpp"
#include "belief_sim/rng.hpp"
#include "belief_sim/sampler.hpp"
#include "belief_sim/scores.hpp"
