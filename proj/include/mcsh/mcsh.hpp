#pragma once

#include "mcsh/grid.hpp"
#include "mcsh/spectral.hpp"
#include "mcsh/finite_difference.hpp"
#include "mcsh/elliptic.hpp"
#include "mcsh/potential.hpp"
#include "mcsh/dynamics.hpp"
#include "mcsh/snapshot.hpp"
#include "mcsh/initial_data.hpp"
#include "mcsh/diagnostics.hpp"
#include "mcsh/config.hpp"
#include "mcsh/runner.hpp"
#include "mcsh/selftest.hpp"
