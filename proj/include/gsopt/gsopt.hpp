#pragma once

#include "air.hpp"
#include "analysis.hpp"
#include "channel.hpp"
#include "common.hpp"
#include "constellation.hpp"
#include "incremental.hpp"
#include "io.hpp"
#include "library.hpp"
#include "manifest.hpp"
#include "optimizer.hpp"
#include "quadrature.hpp"
#include "rate_analysis.hpp"
#include "regions.hpp"
