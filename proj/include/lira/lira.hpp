#pragma once

#include "lira/errors.hpp"
#include "lira/evaluation.hpp"
#include "lira/knn.hpp"
#include "lira/parallel.hpp"
#include "lira/random.hpp"
#include "lira/ratings.hpp"
#include "lira/similarity.hpp"
#include "lira/synthgen.hpp"
