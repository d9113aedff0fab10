#pragma once

#include "csbmlab/dataset_io.hpp"
#include "csbmlab/generators.hpp"
#include "csbmlab/graph.hpp"
#include "csbmlab/linear_models.hpp"
#include "csbmlab/rewire.hpp"
#include "csbmlab/rng.hpp"
#include "csbmlab/spectral.hpp"
#include "csbmlab/sweep.hpp"
#include "csbmlab/theory.hpp"
#include "csbmlab/train.hpp"
