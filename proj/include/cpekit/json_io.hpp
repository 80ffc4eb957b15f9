#pragma once

#include <json.hpp>

#include "cpekit/bench.hpp"
#include "cpekit/control.hpp"
#include "cpekit/design.hpp"
#include "cpekit/identification.hpp"
#include "cpekit/informativity.hpp"
#include "cpekit/lmi.hpp"

namespace cpekit {

using Json = nlohmann::json;

// Matrices as arrays of rows; vectors as flat arrays.
Json to_json(const Matrix& m);
Json vector_to_json(const Vector& v);
Matrix matrix_from_json(const Json& j);

Json to_json(const RankReport& r);
Json to_json(const CpeReport& r);
Json to_json(const RankConditionReport& r);
Json to_json(const TransformationReport& r);
Json to_json(const LengthBound& b);
Json to_json(const DesignLedger& l);
Json to_json(const LsResult& r);
Json to_json(const LmiCertificate& c);
Json to_json(const GainSynthesisResult& g, CompositionMode mode, const std::vector<double>& weights);
Json to_json(const ConvergenceReport& r);
Json to_json(const LogLinearFit& f);
Json to_json(const FlopCosts& c);
Json to_json(const RankBenchReport& r);

}  // namespace cpekit
