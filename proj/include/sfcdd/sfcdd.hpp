#pragma once

#include "sfcdd/error.hpp"
#include "sfcdd/parallel.hpp"
#include "sfcdd/random.hpp"
#include "sfcdd/sfc.hpp"
#include "sfcdd/sparse.hpp"
#include "sfcdd/grid.hpp"
#include "sfcdd/partition.hpp"
#include "sfcdd/coarse.hpp"
#include "sfcdd/schwarz.hpp"
#include "sfcdd/krylov.hpp"
#include "sfcdd/dd_solve.hpp"
#include "sfcdd/combine.hpp"
#include "sfcdd/harness.hpp"
