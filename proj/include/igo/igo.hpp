#pragma once

#include "igo/cycle.hpp"
#include "igo/design.hpp"
#include "igo/error.hpp"
#include "igo/matrix.hpp"
#include "igo/numerics.hpp"
#include "igo/plant.hpp"
#include "igo/runner.hpp"
#include "igo/scenario.hpp"
#include "igo/simulate.hpp"
