#pragma once

#include "pmcr/error.hpp"
#include "pmcr/numerics.hpp"
#include "pmcr/dataset.hpp"
#include "pmcr/bridge_continuous.hpp"
#include "pmcr/bridge_discrete.hpp"
#include "pmcr/teststats.hpp"
#include "pmcr/bootstrap.hpp"
#include "pmcr/scenarios.hpp"
#include "pmcr/harness.hpp"
#include "pmcr/catalog.hpp"
#include "pmcr/csv.hpp"
#include "pmcr/report.hpp"
