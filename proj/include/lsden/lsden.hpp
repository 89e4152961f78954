#pragma once

#include "lsden/bench.hpp"
#include "lsden/emd.hpp"
#include "lsden/error.hpp"
#include "lsden/fft.hpp"
#include "lsden/io.hpp"
#include "lsden/metrics.hpp"
#include "lsden/mlp.hpp"
#include "lsden/noise.hpp"
#include "lsden/rng.hpp"
#include "lsden/signal.hpp"
#include "lsden/spline.hpp"
#include "lsden/threshold.hpp"
#include "lsden/train.hpp"
#include "lsden/wav.hpp"
