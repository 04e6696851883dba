#pragma once

#include <sgca/error.hpp>
#include <sgca/linalg.hpp>
#include <sgca/rng.hpp>
#include <sgca/types.hpp>
#include <sgca/geneig.hpp>
#include <sgca/models.hpp>
#include <sgca/tgd.hpp>
#include <sgca/fantope.hpp>
#include <sgca/backend.hpp>
#include <sgca/harness/stats.hpp>
#include <sgca/harness/csv.hpp>
#include <sgca/harness/cv.hpp>
#include <sgca/harness/experiment.hpp>
#include <sgca/harness/config.hpp>
#include <sgca/harness/output.hpp>
#include <sgca/harness/presets.hpp>
