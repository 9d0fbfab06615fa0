#pragma once

#include "rsdetect/detectors.hpp"
#include "rsdetect/error.hpp"
#include "rsdetect/matrix_core.hpp"
#include "rsdetect/montecarlo.hpp"
#include "rsdetect/oracle.hpp"
#include "rsdetect/scenario.hpp"
