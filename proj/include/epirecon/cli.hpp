#pragma once

#include "epirecon/cli/commands.hpp"
#include "epirecon/cli/datasets.hpp"
#include "epirecon/cli/svg.hpp"
