#pragma once

#include "lattice.hpp"
#include "random.hpp"
#include "snapshot.hpp"
#include "stats.hpp"
#include "parallel.hpp"
#include "dynamics.hpp"
#include "geometry.hpp"
#include "curtain.hpp"
#include "sail.hpp"
#include "renorm.hpp"
#include "export.hpp"
#include "experiment.hpp"
