#pragma once

// Everything except the JSON reports (reserve_control/report.hpp), which need
// nlohmann's json.hpp on the include path.

#include "reserve_control/model.hpp"
#include "reserve_control/feedback.hpp"
#include "reserve_control/value_function.hpp"
#include "reserve_control/verification.hpp"
#include "reserve_control/simulation.hpp"
#include "reserve_control/grid_oracle.hpp"
#include "reserve_control/tables.hpp"
