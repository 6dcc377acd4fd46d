#pragma once

#include "epirecon/deconv/duration.hpp"
#include "epirecon/deconv/reconstruct.hpp"
#include "epirecon/deconv/scale.hpp"
#include "epirecon/deconv/series.hpp"
#include "epirecon/deconv/simcheck.hpp"
