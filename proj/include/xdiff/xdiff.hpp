#pragma once

#include "xdiff/errors.hpp"
#include "xdiff/grid.hpp"
#include "xdiff/model.hpp"
#include "xdiff/timestepper.hpp"
#include "xdiff/transform.hpp"
#include "xdiff/diagnostics.hpp"
#include "xdiff/pairlab.hpp"
#include "xdiff/mms.hpp"
