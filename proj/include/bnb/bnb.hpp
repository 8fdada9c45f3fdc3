#pragma once

// Umbrella header.

#include "bitset.hpp"
#include "closed.hpp"
#include "code_table.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "scoring.hpp"
#include "slim.hpp"
#include "stats.hpp"
#include "synth.hpp"
