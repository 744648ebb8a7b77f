#pragma once

#include "swarmstab/certify.hpp"
#include "swarmstab/ctmc.hpp"
#include "swarmstab/feedback.hpp"
#include "swarmstab/graph.hpp"
#include "swarmstab/openloop.hpp"
#include "swarmstab/rng.hpp"
#include "swarmstab/simulate.hpp"
#include "swarmstab/synth.hpp"
#include "swarmstab/types.hpp"
