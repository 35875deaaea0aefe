#pragma once

#include "slsmpc/cluster.hpp"
#include "slsmpc/dataset.hpp"
#include "slsmpc/error.hpp"
#include "slsmpc/fusion.hpp"
#include "slsmpc/metrics.hpp"
#include "slsmpc/pair_table.hpp"
#include "slsmpc/pipeline.hpp"
#include "slsmpc/prob_graph.hpp"
#include "slsmpc/probfn.hpp"
#include "slsmpc/refine.hpp"
#include "slsmpc/similarity.hpp"
