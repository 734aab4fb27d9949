#pragma once

#include "comgreen/catalog.hpp"
#include "comgreen/conservation.hpp"
#include "comgreen/errors.hpp"
#include "comgreen/grid.hpp"
#include "comgreen/grid_operators.hpp"
#include "comgreen/kernel.hpp"
#include "comgreen/lower.hpp"
#include "comgreen/parallel.hpp"
#include "comgreen/params.hpp"
#include "comgreen/parser.hpp"
#include "comgreen/phasespace.hpp"
#include "comgreen/pipeline.hpp"
#include "comgreen/time_scalar.hpp"
#include "comgreen/verifier.hpp"
