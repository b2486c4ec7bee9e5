#pragma once

#include "softrank/core.hpp"
#include "softrank/halton.hpp"
#include "softrank/ot.hpp"
#include "softrank/stats.hpp"
#include "softrank/decorrelation.hpp"
#include "softrank/generator.hpp"
#include "softrank/filter.hpp"
#include "softrank/synth.hpp"
#include "softrank/io.hpp"
#include "softrank/config.hpp"
#include "softrank/parallel.hpp"
#include "softrank/model_io.hpp"
#include "softrank/experiments.hpp"
