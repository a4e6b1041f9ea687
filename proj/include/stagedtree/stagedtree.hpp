#ifndef STAGEDTREE_STAGEDTREE_HPP
#define STAGEDTREE_STAGEDTREE_HPP

#include "stagedtree/error.hpp"
#include "stagedtree/tree.hpp"
#include "stagedtree/parameters.hpp"
#include "stagedtree/tree_io.hpp"
#include "stagedtree/expfam.hpp"
#include "stagedtree/polynomial.hpp"
#include "stagedtree/stage_algebra.hpp"
#include "stagedtree/bn.hpp"
#include "stagedtree/data.hpp"
#include "stagedtree/parallel.hpp"
#include "stagedtree/inference.hpp"

#endif  // STAGEDTREE_STAGEDTREE_HPP
