#pragma once

#include <string>

#include "nextgrade/baselines.hpp"
#include "nextgrade/fm.hpp"
#include "nextgrade/forest.hpp"
#include "nextgrade/linear_sgd.hpp"
#include "nextgrade/pmlr.hpp"
#include "nextgrade/svd.hpp"

namespace nextgrade {

// Versioned JSON dumps; doubles round-trip exactly (shortest-representation
// printing). Loaders reject unknown kinds or versions.

std::string to_json(const FmModel& m);
FmModel fm_from_json(const std::string& text);

std::string to_json(const SvdModel& m);
SvdModel svd_from_json(const std::string& text);

std::string to_json(const LinearModel& m);
LinearModel linear_from_json(const std::string& text);

std::string to_json(const ForestModel& m);
ForestModel forest_from_json(const std::string& text);

std::string to_json(const PmlrModel& m);
PmlrModel pmlr_from_json(const std::string& text);

std::string to_json(const MeansModel& m);
MeansModel means_from_json(const std::string& text);

}  // namespace nextgrade
