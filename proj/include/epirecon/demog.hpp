#pragma once

#include "epirecon/demog/iterate.hpp"
#include "epirecon/demog/seasonal.hpp"
#include "epirecon/demog/split.hpp"
#include "epirecon/demog/synthetic.hpp"
#include "epirecon/demog/tables.hpp"
