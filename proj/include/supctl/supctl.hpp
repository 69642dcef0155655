#pragma once

#include "supctl/common.hpp"
#include "supctl/formula.hpp"
#include "supctl/dfa.hpp"
#include "supctl/des.hpp"
#include "supctl/product.hpp"
#include "supctl/ranking.hpp"
#include "supctl/supervisor.hpp"
#include "supctl/sim.hpp"
