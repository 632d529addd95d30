#pragma once

// JSON serialization of results for the command-line reports.

#include <nlohmann/json.hpp>

#include "magflow/dynamics.hpp"
#include "magflow/orbit.hpp"
#include "magflow/predictions.hpp"

namespace magflow {

nlohmann::json vector_json(const Vector& v);
nlohmann::json matrix_json(const Matrix& m);

nlohmann::json to_json(const WilliamsonResult& w);
nlohmann::json to_json(const WilliamsonCheck& c);
nlohmann::json to_json(const ResonancePartition& p);
nlohmann::json to_json(const BoundReport& b);
nlohmann::json to_json(const SpectrumField& f);
nlohmann::json to_json(const ConvergenceGap& g);
nlohmann::json to_json(const OrbitRecord& o);
nlohmann::json to_json(const CensusRow& r);
nlohmann::json to_json(const OrbitCensus& c);

}  // namespace magflow
