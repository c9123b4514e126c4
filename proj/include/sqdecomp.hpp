#pragma once

// Hierarchical superquadric-pair decomposition of 3D shapes.

#include "sqdecomp/config.hpp"
#include "sqdecomp/error.hpp"
#include "sqdecomp/export.hpp"
#include "sqdecomp/fitter.hpp"
#include "sqdecomp/geometry.hpp"
#include "sqdecomp/metrics.hpp"
#include "sqdecomp/parallel.hpp"
#include "sqdecomp/splitter.hpp"
#include "sqdecomp/sqtree.hpp"
#include "sqdecomp/superquadric.hpp"
