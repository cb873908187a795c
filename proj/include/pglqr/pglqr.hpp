#pragma once

#include "pglqr/core/errors.hpp"
#include "pglqr/core/linalg.hpp"
#include "pglqr/core/parallel.hpp"
#include "pglqr/control/plant.hpp"
#include "pglqr/control/lyapunov.hpp"
#include "pglqr/control/exact.hpp"
#include "pglqr/control/riccati.hpp"
#include "pglqr/sim/seeding.hpp"
#include "pglqr/sim/rollout.hpp"
#include "pglqr/sim/oracle.hpp"
#include "pglqr/estimation/zeroth_order.hpp"
#include "pglqr/bounds/certificates.hpp"
#include "pglqr/optim/trace.hpp"
#include "pglqr/optim/schedule.hpp"
#include "pglqr/optim/model_based.hpp"
#include "pglqr/optim/model_free.hpp"
#include "pglqr/harness/config.hpp"
#include "pglqr/harness/monte_carlo.hpp"
#include "pglqr/harness/output.hpp"
#include "pglqr/harness/presets.hpp"
#include "pglqr/harness/bounds_report.hpp"
