#include "nplab/models/checkpoint.hpp"

#include <fstream>

#include "nplab/errors.hpp"
#include "nplab/json_fields.hpp"

namespace nplab::models {

using nlohmann::json;

json to_json(const ModelConfig& cfg) {
  return {{"kind", to_string(cfg.kind)},
          {"dims", {{"x", cfg.dims.x}, {"y", cfg.dims.y}, {"h", cfg.dims.h}, {"z", cfg.dims.z}, {"u", cfg.dims.u}}},
          {"attention", to_string(cfg.attention.kind)},
          {"normalize_attention", cfg.attention.normalize},
          {"variance_mode", to_string(cfg.attention.variance_mode)},
          {"leaky_slope", cfg.leaky_slope}};
}

void update_from_json(ModelConfig& cfg, const json& j, const std::string& path) {
  reject_unknown_keys(j, {"kind", "dims", "attention", "normalize_attention", "variance_mode", "leaky_slope"}, path);
  std::string s;
  if (j.contains("kind")) {
    read_field(j, "kind", s, path);
    cfg.kind = parse_model_kind(s);
  }
  if (j.contains("attention")) {
    read_field(j, "attention", s, path);
    cfg.attention.kind = parse_attention_kind(s);
  }
  if (j.contains("variance_mode")) {
    read_field(j, "variance_mode", s, path);
    cfg.attention.variance_mode = parse_variance_mode(s);
  }
  read_field(j, "normalize_attention", cfg.attention.normalize, path);
  read_field(j, "leaky_slope", cfg.leaky_slope, path);
  if (j.contains("dims")) {
    const json& d = j.at("dims");
    const std::string dp = path + ".dims";
    reject_unknown_keys(d, {"x", "y", "h", "z", "u"}, dp);
    read_field(d, "x", cfg.dims.x, dp);
    read_field(d, "y", cfg.dims.y, dp);
    read_field(d, "h", cfg.dims.h, dp);
    read_field(d, "z", cfg.dims.z, dp);
    read_field(d, "u", cfg.dims.u, dp);
  }
}

json to_json(const MlpParams& net) {
  json layers = json::array();
  for (const Layer& l : net.layers) {
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weight", std::vector<double>(l.weight.data(), l.weight.data() + l.weight.size())},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())},
                      {"activation", l.activation.kind == ActivationKind::leaky_relu ? "leaky_relu" : "identity"},
                      {"slope", l.activation.slope}});
  }
  return layers;
}

MlpParams mlp_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of layers");
  MlpParams net;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& lj = j[i];
    const std::string lp = path + "[" + std::to_string(i) + "]";
    reject_unknown_keys(lj, {"rows", "cols", "weight", "bias", "activation", "slope"}, lp);
    Index rows = 0, cols = 0;
    std::vector<double> w, b;
    std::string act = "identity";
    Layer l;
    read_field(lj, "rows", rows, lp);
    read_field(lj, "cols", cols, lp);
    read_field(lj, "weight", w, lp);
    read_field(lj, "bias", b, lp);
    read_field(lj, "activation", act, lp);
    read_field(lj, "slope", l.activation.slope, lp);
    if (rows < 1 || cols < 1 || static_cast<Index>(w.size()) != rows * cols || static_cast<Index>(b.size()) != rows)
      throw ConfigError(lp + ": weight/bias sizes do not match rows x cols");
    if (act == "leaky_relu") {
      l.activation.kind = ActivationKind::leaky_relu;
    } else if (act == "identity") {
      l.activation.kind = ActivationKind::identity;
    } else {
      throw ConfigError(lp + ".activation: unknown activation '" + act + "'");
    }
    l.weight = Eigen::Map<const Matrix>(w.data(), rows, cols);
    l.bias = Eigen::Map<const Vector>(b.data(), rows);
    net.layers.push_back(std::move(l));
  }
  return net;
}

json checkpoint_to_json(const Model& model) {
  json nets = json::object();
  for (const ConstNet& n : model.nets()) nets[std::string(n.name)] = to_json(*n.net);
  return {{"format_version", kCheckpointFormatVersion}, {"model", to_json(model.config())}, {"nets", nets}};
}

Model checkpoint_from_json(const json& j) {
  reject_unknown_keys(j, {"format_version", "model", "nets"}, "checkpoint");
  int version = 0;
  read_field(j, "format_version", version, "checkpoint");
  if (version != kCheckpointFormatVersion)
    throw ConfigError("checkpoint.format_version: unsupported version " + std::to_string(version));
  if (!j.contains("model") || !j.contains("nets")) throw ConfigError("checkpoint: missing model or nets");
  ModelConfig cfg;
  update_from_json(cfg, j.at("model"), "checkpoint.model");
  cfg.validate();
  Rng scratch(0);
  Model m = Model::initialize(cfg, scratch);
  const json& nets = j.at("nets");
  for (const MutableNet& n : m.nets()) {
    const std::string key(n.name);
    if (!nets.contains(key)) throw ConfigError("checkpoint.nets." + key + ": missing");
    MlpParams loaded = mlp_from_json(nets.at(key), "checkpoint.nets." + key);
    if (loaded.layers.size() != n.net->layers.size())
      throw DimensionError("checkpoint.nets." + key + ": layer count does not match the model dims");
    for (std::size_t i = 0; i < loaded.layers.size(); ++i)
      if (loaded.layers[i].weight.rows() != n.net->layers[i].weight.rows() ||
          loaded.layers[i].weight.cols() != n.net->layers[i].weight.cols())
        throw DimensionError("checkpoint.nets." + key + ": layer shape does not match the model dims");
    loaded.validate();
    *n.net = std::move(loaded);
  }
  return m;
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write checkpoint '" + path + "'");
  os << checkpoint_to_json(model).dump() << '\n';
  if (!os) throw IoError("failed writing checkpoint '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read checkpoint '" + path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint '" + path + "': " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace nplab::models
