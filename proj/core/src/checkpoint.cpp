#include "scnn/checkpoint.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "raw_io.hpp"

namespace scnn {

using nlohmann::json;

namespace {

json spec_to_json(const RegressorSpec& spec) {
  json stages = json::array();
  for (const ConvStage& s : spec.stages)
    stages.push_back({{"kernel", s.kernel}, {"out", s.out_channels}, {"pool", s.pool_after}});
  return {{"name", spec.name}, {"stages", stages}};
}

RegressorSpec spec_from_json(const json& j) {
  RegressorSpec spec;
  spec.name = j.at("name").get<std::string>();
  for (const json& s : j.at("stages"))
    spec.stages.push_back(
        {s.at("kernel").get<int>(), s.at("out").get<int>(), s.at("pool").get<bool>()});
  return spec;
}

json tensor_directory(nn::Network<float>& net, size_t& offset) {
  json tensors = json::array();
  for (const auto& p : net.params()) {
    tensors.push_back({{"name", p.name},
                       {"shape", {p.value->channels, p.value->height, p.value->width}},
                       {"offset", offset}});
    offset += p.value->size();
  }
  return tensors;
}

void write_net_payload(std::ofstream& raw, nn::Network<float>& net) {
  for (const auto& p : net.params())
    detail::write_f32_span(raw, p.value->data.data(), p.value->size());
}

void read_net_payload(std::ifstream& raw, nn::Network<float>& net, const json& tensors,
                      const std::string& stem) {
  std::map<std::string, nn::ParamView<float>> by_name;
  for (const auto& p : net.params()) by_name.emplace(p.name, p);
  for (const json& t : tensors) {
    const std::string name = t.at("name").get<std::string>();
    const auto it = by_name.find(name);
    if (it == by_name.end())
      throw std::runtime_error(stem + ": checkpoint tensor " + name + " not in architecture");
    const auto shape = t.at("shape").get<std::vector<int>>();
    nn::Tensor<float>* dst = it->second.value;
    if (shape.size() != 3 || shape[0] != dst->channels || shape[1] != dst->height ||
        shape[2] != dst->width)
      throw std::runtime_error(stem + ": checkpoint tensor " + name + " shape mismatch");
    raw.seekg(static_cast<std::streamoff>(t.at("offset").get<size_t>()) * 4);
    detail::read_f32_span(raw, dst->data.data(), dst->size());
  }
}

}  // namespace

void save_checkpoint(const std::string& stem, const std::string& stage, uint64_t seed,
                     int epoch, const std::vector<Regressor*>& regressors,
                     SwitchClassifier* switch_classifier) {
  json meta;
  meta["format"] = "scnn-checkpoint";
  meta["version"] = 1;
  meta["stage"] = stage;
  meta["seed"] = seed;
  meta["epoch"] = epoch;
  json nets = json::array();
  size_t offset = 0;
  for (Regressor* reg : regressors) {
    json n;
    n["kind"] = "regressor";
    n["spec"] = spec_to_json(reg->spec());
    n["seed"] = reg->seed();
    n["epoch"] = reg->epoch;
    n["tensors"] = tensor_directory(reg->net(), offset);
    nets.push_back(n);
  }
  if (switch_classifier) {
    json n;
    n["kind"] = "switch";
    n["backbone"] = backbone_name(switch_classifier->backbone());
    n["classes"] = switch_classifier->num_classes();
    n["input_size"] = switch_classifier->input_size();
    n["seed"] = switch_classifier->seed();
    n["epoch"] = switch_classifier->epoch;
    n["tensors"] = tensor_directory(switch_classifier->net(), offset);
    nets.push_back(n);
  }
  meta["networks"] = nets;

  std::ofstream mf(stem + ".meta");
  if (!mf) throw std::runtime_error("cannot create " + stem + ".meta");
  mf << meta.dump(2) << "\n";

  std::ofstream raw(stem + ".raw", std::ios::binary);
  if (!raw) throw std::runtime_error("cannot create " + stem + ".raw");
  for (Regressor* reg : regressors) write_net_payload(raw, reg->net());
  if (switch_classifier) write_net_payload(raw, switch_classifier->net());
}

Checkpoint load_checkpoint(const std::string& stem) {
  std::ifstream mf(stem + ".meta");
  if (!mf) throw std::runtime_error("missing checkpoint " + stem + ".meta");
  json meta;
  try {
    mf >> meta;
  } catch (const json::exception& e) {
    throw std::runtime_error(stem + ".meta: malformed JSON: " + e.what());
  }
  if (meta.value("format", "") != "scnn-checkpoint")
    throw std::runtime_error(stem + ".meta: not a checkpoint file");

  Checkpoint ck;
  ck.stage = meta.value("stage", "");
  ck.seed = meta.value("seed", uint64_t(0));
  ck.epoch = meta.value("epoch", 0);

  std::ifstream raw(stem + ".raw", std::ios::binary);
  if (!raw) throw std::runtime_error("missing checkpoint " + stem + ".raw");

  for (const json& n : meta.at("networks")) {
    const std::string kind = n.at("kind").get<std::string>();
    if (kind == "regressor") {
      Regressor reg(spec_from_json(n.at("spec")), n.at("seed").get<uint64_t>());
      reg.epoch = n.value("epoch", 0);
      read_net_payload(raw, reg.net(), n.at("tensors"), stem);
      ck.regressors.push_back(std::move(reg));
    } else if (kind == "switch") {
      SwitchClassifier sw(parse_backbone(n.at("backbone").get<std::string>()),
                          n.at("classes").get<int>(), n.at("input_size").get<int>(),
                          n.at("seed").get<uint64_t>());
      sw.epoch = n.value("epoch", 0);
      read_net_payload(raw, sw.net(), n.at("tensors"), stem);
      ck.switch_classifier = std::move(sw);
    } else {
      throw std::runtime_error(stem + ".meta: unknown network kind " + kind);
    }
  }
  return ck;
}

}  // namespace scnn
