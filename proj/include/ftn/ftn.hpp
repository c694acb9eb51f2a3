#pragma once

// Umbrella header.

#include "ftn/arfit.hpp"
#include "ftn/banded.hpp"
#include "ftn/bench.hpp"
#include "ftn/channel.hpp"
#include "ftn/cli.hpp"
#include "ftn/coding.hpp"
#include "ftn/constellation.hpp"
#include "ftn/equalize.hpp"
#include "ftn/error.hpp"
#include "ftn/harness.hpp"
#include "ftn/pulse.hpp"
#include "ftn/rng.hpp"
#include "ftn/softmap.hpp"
