#pragma once

#include "olim/factoring.hpp"
#include "olim/fmm.hpp"
#include "olim/grid.hpp"
#include "olim/heap.hpp"
#include "olim/io.hpp"
#include "olim/marcher.hpp"
#include "olim/problems.hpp"
#include "olim/stencil.hpp"
#include "olim/update.hpp"
#include "olim/vec.hpp"
