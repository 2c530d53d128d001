#pragma once

// Umbrella header.

#include "amlab/ball_sweep.hpp"
#include "amlab/error.hpp"
#include "amlab/fft.hpp"
#include "amlab/grid.hpp"
#include "amlab/io.hpp"
#include "amlab/norms.hpp"
#include "amlab/operators.hpp"
#include "amlab/parallel.hpp"
#include "amlab/verify.hpp"
#include "amlab/weights.hpp"
