#pragma once

#include "qlbm/angles.hpp"
#include "qlbm/circuit.hpp"
#include "qlbm/errors.hpp"
#include "qlbm/field.hpp"
#include "qlbm/fwht.hpp"
#include "qlbm/lattice.hpp"
#include "qlbm/mps.hpp"
#include "qlbm/pipeline.hpp"
#include "qlbm/qpixl.hpp"
#include "qlbm/readout.hpp"
#include "qlbm/sampling.hpp"
#include "qlbm/scenario.hpp"
#include "qlbm/statevector.hpp"
#include "qlbm/sweeps.hpp"
#include "qlbm/walls.hpp"
