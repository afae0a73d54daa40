#pragma once

#include "mjls/grid.hpp"
#include "mjls/io.hpp"
#include "mjls/matrix_field.hpp"
#include "mjls/model_config.hpp"
#include "mjls/operators.hpp"
#include "mjls/riccati.hpp"
#include "mjls/simulate.hpp"
#include "mjls/stability.hpp"
#include "mjls/system.hpp"
