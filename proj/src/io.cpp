#include "e2e/io.hpp"

#include <fstream>
#include <sstream>

#include "e2e/error.hpp"

namespace e2e {

namespace fs = std::filesystem;

void write_text_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json to_json(const nn::DenseNet& net) {
  auto layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"activation", nn::to_string(l.activation)},
                      {"weight", std::vector<double>(l.weight.flat().begin(), l.weight.flat().end())},
                      {"bias", l.bias}});
  }
  return layers;
}

nn::DenseNet dense_net_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw IoError("checkpoint: 'layers' must be an array");
  std::vector<nn::DenseLayer> layers;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& lj = j[i];
    try {
      nn::DenseLayer l;
      const auto rows = lj.at("rows").get<std::size_t>();
      const auto cols = lj.at("cols").get<std::size_t>();
      l.weight = Matrix(rows, cols, lj.at("weight").get<std::vector<double>>());
      l.bias = lj.at("bias").get<std::vector<double>>();
      l.activation = nn::activation_from_string(lj.at("activation").get<std::string>());
      layers.push_back(std::move(l));
    } catch (const nlohmann::json::exception& e) {
      throw IoError("checkpoint: layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return nn::DenseNet(std::move(layers));
}

void save_checkpoint(const fs::path& path, const Checkpoint& checkpoint) {
  nlohmann::json j;
  j["format"] = "e2e-checkpoint-v1";
  j["role"] = checkpoint.role;
  j["seed"] = checkpoint.seed;
  j["config"] = checkpoint.config;
  j["layers"] = to_json(checkpoint.net);
  write_text_atomic(path, j.dump(1) + "\n");
}

Checkpoint load_checkpoint(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "e2e-checkpoint-v1") {
      throw IoError("'" + path.string() + "': unsupported checkpoint format");
    }
    Checkpoint c;
    c.role = j.at("role").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.config = j.at("config");
    c.net = dense_net_from_json(j.at("layers"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  } catch (const ShapeError& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace e2e
