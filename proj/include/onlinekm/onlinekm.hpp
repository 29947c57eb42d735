#pragma once

#include "onlinekm/coreset.hpp"
#include "onlinekm/error.hpp"
#include "onlinekm/ftl.hpp"
#include "onlinekm/geometry.hpp"
#include "onlinekm/grid.hpp"
#include "onlinekm/grid_mwua.hpp"
#include "onlinekm/harness.hpp"
#include "onlinekm/hrd.hpp"
#include "onlinekm/mtmw.hpp"
#include "onlinekm/offline.hpp"
#include "onlinekm/random.hpp"
#include "onlinekm/reduction.hpp"
#include "onlinekm/regmin.hpp"
#include "onlinekm/streams.hpp"
