#pragma once

#include "modelyap/bit_block.hpp"
#include "modelyap/cipher.hpp"
#include "modelyap/classify.hpp"
#include "modelyap/ensemble.hpp"
#include "modelyap/kat.hpp"
#include "modelyap/lyapunov.hpp"
#include "modelyap/mode.hpp"
#include "modelyap/natural.hpp"
#include "modelyap/plot.hpp"
#include "modelyap/results_io.hpp"
#include "modelyap/stats.hpp"
