#include "ikf/nn/model_io.hpp"

#include <fstream>

#include "ikf/common/error.hpp"

namespace ikf::nn {

using nlohmann::json;

json model_to_json(const Mlp& net) {
  json layers = json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    layers.push_back({{"rows", l.weights.rows()},
                      {"cols", l.weights.cols()},
                      {"weights", w},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())},
                      {"activation", std::string(to_string(l.activation))}});
  }
  return {{"version", kModelFormatVersion},
          {"dims", {{"input", net.input_dim()}, {"output", net.output_dim()}}},
          {"layers", layers}};
}

namespace {

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(path + "." + key, "missing");
  return j.at(key);
}

long integer_field(const json& j, const std::string& key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_number_integer() || v.get<long>() <= 0)
    throw ParseError(path + "." + key, "expected a positive integer");
  return v.get<long>();
}

std::vector<double> number_array(const json& j, const std::string& key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_array()) throw ParseError(path + "." + key, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw ParseError(path + "." + key, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

Mlp model_from_json(const json& j) {
  const auto version = field(j, "version", "model");
  if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion)
    throw ParseError("model.version", "unsupported version");
  const auto& layers_j = field(j, "layers", "model");
  if (!layers_j.is_array() || layers_j.empty()) throw ParseError("model.layers", "expected a non-empty array");

  std::vector<Layer> layers;
  for (std::size_t k = 0; k < layers_j.size(); ++k) {
    const std::string path = "layers[" + std::to_string(k) + "]";
    const auto& lj = layers_j[k];
    const long rows = integer_field(lj, "rows", path);
    const long cols = integer_field(lj, "cols", path);
    if (k > 0 && cols != layers.back().weights.rows())
      throw ParseError(path + ".cols", "value " + std::to_string(cols) + " does not match rows " +
                                           std::to_string(layers.back().weights.rows()) + " of layers[" +
                                           std::to_string(k - 1) + "]");
    const auto w = number_array(lj, "weights", path);
    if (static_cast<long>(w.size()) != rows * cols)
      throw ParseError(path + ".weights", "expected " + std::to_string(rows * cols) + " values, got " +
                                              std::to_string(w.size()));
    const auto b = number_array(lj, "bias", path);
    if (static_cast<long>(b.size()) != rows)
      throw ParseError(path + ".bias", "expected " + std::to_string(rows) + " values, got " +
                                           std::to_string(b.size()));
    const auto& act = field(lj, "activation", path);
    if (!act.is_string()) throw ParseError(path + ".activation", "expected a string");
    Layer layer;
    try {
      layer.activation = activation_from_string(act.get<std::string>());
    } catch (const Error& e) {
      throw ParseError(path + ".activation", e.what());
    }
    layer.weights.resize(rows, cols);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
    layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), rows);
    if (k + 1 < layers_j.size() && layer.activation != Activation::relu)
      throw ParseError(path + ".activation", "hidden layers must be relu");
    layers.push_back(std::move(layer));
  }
  if (j.contains("dims")) {
    const auto& dims = j.at("dims");
    if (integer_field(dims, "input", "model.dims") != layers.front().weights.cols())
      throw ParseError("model.dims.input", "does not match layers[0].cols");
    if (integer_field(dims, "output", "model.dims") != layers.back().weights.rows())
      throw ParseError("model.dims.output", "does not match final layer rows");
  }
  try {
    return Mlp(std::move(layers));
  } catch (const Error& e) {
    throw ParseError("model.layers", e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

void save_model(const Mlp& net, const std::filesystem::path& path) { write_json_file(model_to_json(net), path); }

Mlp load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

}  // namespace ikf::nn
