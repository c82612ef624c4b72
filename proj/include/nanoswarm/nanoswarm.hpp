#pragma once

#include "agents.hpp"
#include "avoidance.hpp"
#include "compute.hpp"
#include "config.hpp"
#include "event_log.hpp"
#include "experiments.hpp"
#include "geometry.hpp"
#include "localization.hpp"
#include "metrics.hpp"
#include "mission.hpp"
#include "rng.hpp"
#include "sensing.hpp"
#include "uwb.hpp"
#include "world.hpp"
