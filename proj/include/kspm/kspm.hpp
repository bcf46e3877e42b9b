#pragma once

// Everything in one include.

#include "kspm/core.hpp"
#include "kspm/strategies.hpp"
#include "kspm/pseudolocal.hpp"
#include "kspm/rational.hpp"
#include "kspm/analysis.hpp"
#include "kspm/bench.hpp"
#include "kspm/trace_io.hpp"
#include "kspm/verify.hpp"
