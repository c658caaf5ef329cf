#pragma once

#include "abc.hpp"
#include "diagnostics.hpp"
#include "distributions.hpp"
#include "errors.hpp"
#include "med_iqr_conditional.hpp"
#include "med_mad_conditional.hpp"
#include "order_stats.hpp"
#include "orderstat_engine.hpp"
#include "posterior_updates.hpp"
#include "quantile_conditional.hpp"
#include "rng.hpp"
#include "sampler.hpp"
