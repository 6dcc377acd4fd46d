#pragma once

#include "epirecon/smooth/basis.hpp"
#include "epirecon/smooth/newton.hpp"
#include "epirecon/smooth/penalty.hpp"
#include "epirecon/smooth/reml.hpp"
