#pragma once

// Umbrella header: the full solver stack in one include.

#include "duplex/errors.hpp"
#include "duplex/sparse_vector.hpp"
#include "duplex/timing.hpp"
#include "duplex/lp.hpp"
#include "duplex/mps.hpp"
#include "duplex/factor.hpp"
#include "duplex/parallel.hpp"
#include "duplex/dual_core.hpp"
#include "duplex/serial.hpp"
#include "duplex/pami.hpp"
#include "duplex/sip.hpp"
#include "duplex/bench.hpp"
