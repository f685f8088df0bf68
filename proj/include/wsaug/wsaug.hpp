#pragma once

// Umbrella header for the weight-space augmentation toolkit. The CLI front
// end (cli.hpp) is intentionally excluded; include it directly if needed.

#include "wsaug/alignmix.hpp"
#include "wsaug/augment.hpp"
#include "wsaug/core.hpp"
#include "wsaug/fit.hpp"
#include "wsaug/harness.hpp"
#include "wsaug/pgm.hpp"
#include "wsaug/pipeline_io.hpp"
#include "wsaug/rng.hpp"
#include "wsaug/serialize.hpp"
#include "wsaug/signals.hpp"
#include "wsaug/symmetry.hpp"
