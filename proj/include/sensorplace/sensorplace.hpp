#pragma once

#include "sensorplace/basis.hpp"
#include "sensorplace/constraints.hpp"
#include "sensorplace/error.hpp"
#include "sensorplace/expression.hpp"
#include "sensorplace/io.hpp"
#include "sensorplace/numerics.hpp"
#include "sensorplace/optimizers.hpp"
#include "sensorplace/pipeline.hpp"
#include "sensorplace/reconstruct.hpp"
#include "sensorplace/synthetic.hpp"
#include "sensorplace/uq.hpp"
