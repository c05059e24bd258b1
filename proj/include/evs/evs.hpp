#pragma once

#include "evs/channel_model.hpp"
#include "evs/error.hpp"
#include "evs/moments.hpp"
#include "evs/polymatroid.hpp"
#include "evs/rate_region.hpp"
#include "evs/rng.hpp"
#include "evs/serialize.hpp"
#include "evs/subset.hpp"
#include "evs/symmetric.hpp"
#include "evs/waterfilling.hpp"
#include "evs/experiments/config.hpp"
#include "evs/experiments/content_hash.hpp"
#include "evs/experiments/runner.hpp"
