#pragma once

// Umbrella header: graph containers and propagation, the neural predictor,
// the propagation-then-training family, verification, noise experiments,
// and the benchmark harness.

#include "ptlab/common.hpp"
#include "ptlab/dense.hpp"
#include "ptlab/sparse.hpp"
#include "ptlab/graph.hpp"
#include "ptlab/dataset_io.hpp"
#include "ptlab/propagation.hpp"
#include "ptlab/mlp.hpp"
#include "ptlab/losses.hpp"
#include "ptlab/training.hpp"
#include "ptlab/equivalence.hpp"
#include "ptlab/noise.hpp"
#include "ptlab/stats.hpp"
#include "ptlab/bench.hpp"
