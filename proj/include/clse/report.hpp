#pragma once

#include "clse/asymptotics.hpp"
#include "clse/diagnostics.hpp"
#include "clse/estimators.hpp"
#include "clse/montecarlo.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace clse {

using Json = nlohmann::ordered_json;

Json to_json(const ParamVec& v);
Json to_json(const ParamMat& m);
Json to_json(const OptimizerConfig& c);
Json to_json(const EstimationResult& r);
Json to_json(const InfoMatrix& info);
Json to_json(const std::vector<Interval>& intervals);
Json to_json(const DiagnosticsReport& r);
Json to_json(const Scenario& s);
/// Wall time is left out unless asked for, so reruns stay byte-identical.
Json to_json(const MonteCarloSummary& s, bool include_timing = false);

ParamVec params_from_json(const Json& j);
Box box_from_json(const Json& j);
/// Missing keys keep their defaults.
OptimizerConfig optimizer_from_json(const Json& j, OptimizerConfig base = {});
Scenario scenario_from_json(const Json& j);

/// Raw standardized errors, header `coordinate,replicate,value`.
std::string samples_csv(const MonteCarloSummary& s);

struct PlotPoint {
  std::string series;
  double x = 0.0;
  double y = 0.0;
};

/// Plot data with header `series,x,y`.
std::string plot_csv(const std::vector<PlotPoint>& points);

std::string dump(const Json& j);

}  // namespace clse
