#pragma once

// Umbrella header: the whole library except the CLI driver (which pulls in
// the vendored argument parser and JSON writer; include xitrace/cli.hpp
// separately if you want that).

#include "xitrace/config.hpp"
#include "xitrace/core.hpp"
#include "xitrace/experiments.hpp"
#include "xitrace/jacobi.hpp"
#include "xitrace/numerics.hpp"
#include "xitrace/parallel.hpp"
#include "xitrace/periodic.hpp"
#include "xitrace/scattering.hpp"
#include "xitrace/schrodinger.hpp"
#include "xitrace/trace.hpp"
#include "xitrace/xi_grid.hpp"
