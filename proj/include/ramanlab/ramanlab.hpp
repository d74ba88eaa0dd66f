#pragma once

#include "ramanlab/analysis.hpp"
#include "ramanlab/figures.hpp"
#include "ramanlab/interferometer.hpp"
#include "ramanlab/raman_core.hpp"
#include "ramanlab/sequence.hpp"
