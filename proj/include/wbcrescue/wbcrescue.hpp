#pragma once

#include "core.hpp"
#include "features.hpp"
#include "ingest.hpp"
#include "metrics.hpp"
#include "morphology.hpp"
#include "noise.hpp"
#include "rescue.hpp"
