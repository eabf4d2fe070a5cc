#include "awt/eval/report.hpp"

#include <cmath>

namespace awt {

namespace {

nlohmann::json per_class(const std::vector<double>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : v) out.push_back(std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x));
  return out;
}

}  // namespace

nlohmann::json to_json(const Classification& c) {
  return {{"accuracy", c.accuracy}, {"mean_loss", c.mean_loss}, {"count", c.count},
          {"per_class_accuracy", per_class(c.per_class_accuracy)}};
}

nlohmann::json to_json(const LatentProbes& p) {
  return {{"class_probe_acc", p.class_probe_acc},
          {"domain_probe_acc", p.domain_probe_acc},
          {"class_probe_inertia", p.class_probe_inertia},
          {"class_probe_trajectory", p.class_probe_trajectory},
          {"centroid_acc", p.centroid_acc}};
}

nlohmann::json to_json(const MmdScores& m) {
  return {{"i2t", m.i2t}, {"i2t_naive", m.i2t_naive}, {"t2i", m.t2i}, {"t2i_naive", m.t2i_naive}};
}

nlohmann::json to_json(const TranslatedEval& t) {
  nlohmann::json j = to_json(t.result);
  j["source"] = std::string(to_string(t.source));
  if (t.paired_l1) {
    j["paired_l1"] = *t.paired_l1;
    j["paired_count"] = t.paired_count;
  }
  return j;
}

nlohmann::json to_json(const TwoStreamResult& r, std::optional<int> minority_class) {
  nlohmann::json j{{"two_stream", to_json(r.two_stream)}, {"single_stream", to_json(r.single_stream)}};
  if (r.control) j["control"] = to_json(*r.control);
  if (minority_class) {
    const auto k = static_cast<std::size_t>(*minority_class);
    j["minority_class"] = *minority_class;
    const auto pick = [k](const Classification& c) {
      return k < c.per_class_accuracy.size() && !std::isnan(c.per_class_accuracy[k])
                 ? nlohmann::json(c.per_class_accuracy[k])
                 : nlohmann::json(nullptr);
    };
    j["two_stream_minority_acc"] = pick(r.two_stream);
    j["single_stream_minority_acc"] = pick(r.single_stream);
  }
  return j;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j{{"arm", r.arm}};
  if (r.model) {
    const ArmReport& m = *r.model;
    j["mmd"] = m.mmd.i2t;
    j["classifier_acc"] = m.i2t.result.accuracy;
    j["classifier_loss"] = m.i2t.result.mean_loss;
    j["latent_class_probe_acc"] = m.latent.class_probe_acc;
    j["latent_domain_probe_acc"] = m.latent.domain_probe_acc;
    j["mmd_scores"] = to_json(m.mmd);
    j["latent"] = to_json(m.latent);
    j["classifier"] = {{"real_inertia", to_json(m.real_inertia)},
                       {"real_trajectory", to_json(m.real_trajectory)},
                       {"i2t", to_json(m.i2t)},
                       {"t2i", to_json(m.t2i)}};
  }
  if (r.two_stream) {
    j["two_stream_acc"] = r.two_stream->two_stream_acc();
    j["single_stream_acc"] = r.two_stream->single_stream_acc();
    j["two_stream"] = to_json(*r.two_stream, r.minority_class);
  }
  return j;
}

}  // namespace awt
