#pragma once

#include "mvjump/error.hpp"
#include "mvjump/symbolic.hpp"
#include "mvjump/expression.hpp"
#include "mvjump/closure.hpp"
#include "mvjump/random.hpp"
#include "mvjump/parallel.hpp"
#include "mvjump/jump_law.hpp"
#include "mvjump/measures.hpp"
#include "mvjump/coefficients.hpp"
#include "mvjump/metrics.hpp"
#include "mvjump/model.hpp"
#include "mvjump/generator.hpp"
#include "mvjump/dynamics.hpp"
#include "mvjump/control.hpp"
#include "mvjump/io.hpp"
#include "mvjump/config.hpp"
#include "mvjump/checks.hpp"
