#pragma once

#include "portsim/types.hpp"
#include "portsim/rng.hpp"
#include "portsim/dataset.hpp"
#include "portsim/synthetic.hpp"
#include "portsim/portability.hpp"
#include "portsim/als.hpp"
#include "portsim/recommender.hpp"
#include "portsim/behavior.hpp"
#include "portsim/engine.hpp"
#include "portsim/report.hpp"
#include "portsim/suite.hpp"
#include "portsim/config.hpp"
