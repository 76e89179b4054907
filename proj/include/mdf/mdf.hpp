#pragma once

#include "mdf/emlm.hpp"
#include "mdf/error.hpp"
#include "mdf/mdf_stationary.hpp"
#include "mdf/planner.hpp"
#include "mdf/pmf.hpp"
#include "mdf/sim.hpp"
#include "mdf/timevar.hpp"
