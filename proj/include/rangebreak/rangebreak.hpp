#pragma once

#include "rangebreak/dataset.hpp"
#include "rangebreak/errors.hpp"
#include "rangebreak/eval.hpp"
#include "rangebreak/footprint.hpp"
#include "rangebreak/ingest.hpp"
#include "rangebreak/io.hpp"
#include "rangebreak/oracle.hpp"
#include "rangebreak/prices.hpp"
#include "rangebreak/remote.hpp"
#include "rangebreak/solver.hpp"
#include "rangebreak/synth.hpp"
