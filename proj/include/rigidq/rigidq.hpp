#pragma once

#include "rigidq/analysis.hpp"
#include "rigidq/dynamics.hpp"
#include "rigidq/errors.hpp"
#include "rigidq/graph.hpp"
#include "rigidq/io.hpp"
#include "rigidq/lyapunov.hpp"
#include "rigidq/quantizer.hpp"
#include "rigidq/scenario.hpp"
