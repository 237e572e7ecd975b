#pragma once

#include "slan/aut.hpp"
#include "slan/graph.hpp"
#include "slan/lts.hpp"
#include "slan/properties.hpp"
#include "slan/protocol.hpp"
#include "slan/reduction.hpp"
#include "slan/scenario.hpp"
#include "slan/types.hpp"
