#pragma once

#include "cflow/axisym_support.hpp"
#include "cflow/diagnostics.hpp"
#include "cflow/engine.hpp"
#include "cflow/errors.hpp"
#include "cflow/flow_law.hpp"
#include "cflow/geometry_common.hpp"
#include "cflow/speed.hpp"
#include "cflow/sphere_oracle.hpp"
#include "cflow/support_curve.hpp"
