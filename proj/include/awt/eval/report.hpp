#pragma once

#include "awt/eval/evaluate.hpp"
#include "awt/eval/two_stream.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace awt {

/// Everything one evaluation run measured. Absent parts are omitted from JSON.
struct EvalReport {
  std::string arm;
  std::optional<ArmReport> model;
  std::optional<TwoStreamResult> two_stream;
  std::optional<int> minority_class;
};

nlohmann::json to_json(const Classification& c);
nlohmann::json to_json(const LatentProbes& p);
nlohmann::json to_json(const MmdScores& m);
nlohmann::json to_json(const TranslatedEval& t);
nlohmann::json to_json(const TwoStreamResult& r, std::optional<int> minority_class = std::nullopt);

/// Single JSON document. Headline scalars (`mmd`, `classifier_acc`,
/// `classifier_loss`, `latent_class_probe_acc`, `latent_domain_probe_acc`,
/// `two_stream_acc`, `single_stream_acc`) sit at the top level; the nested
/// objects hold both translation directions and per-class arrays.
nlohmann::json to_json(const EvalReport& r);

}  // namespace awt
