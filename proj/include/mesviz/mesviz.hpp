#pragma once

// Umbrella header for the analytics library (no HTTP or CLI dependencies).
#include "mesviz/control.hpp"
#include "mesviz/errors.hpp"
#include "mesviz/event_log.hpp"
#include "mesviz/json_io.hpp"
#include "mesviz/metrics.hpp"
#include "mesviz/rescaling.hpp"
#include "mesviz/synthgen.hpp"
#include "mesviz/time.hpp"
#include "mesviz/timeseries.hpp"
