#pragma once

#include "epirecon/seir/final_size.hpp"
#include "epirecon/seir/lockdown.hpp"
#include "epirecon/seir/model.hpp"
#include "epirecon/seir/reproduction.hpp"
#include "epirecon/seir/solve.hpp"
