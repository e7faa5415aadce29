#pragma once

#include "pwstable/error.hpp"
#include "pwstable/numerics.hpp"
#include "pwstable/price_sources.hpp"
#include "pwstable/mechanism.hpp"
#include "pwstable/speculator.hpp"
#include "pwstable/round_analytics.hpp"
#include "pwstable/stability_theory.hpp"
#include "pwstable/sim_engine.hpp"
