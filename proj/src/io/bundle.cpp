#include <fstream>
#include <sstream>

#include "ortho/errors.hpp"
#include "ortho/io.hpp"

namespace ortho::io {

namespace fs = std::filesystem;

Matrix conv_reshape(std::span<const double> filter, const ConvShape& shape) {
  if (shape.out_channels == 0 || shape.in_channels == 0 || shape.height == 0 || shape.width == 0) {
    throw DimensionError("conv_reshape: every axis must be >= 1");
  }
  if (filter.size() != shape.size()) {
    throw DimensionError("conv_reshape: filter has " + std::to_string(filter.size()) +
                         " values, shape needs " + std::to_string(shape.size()));
  }
  Matrix w(shape.fan_in(), shape.out_channels);
  std::size_t t = 0;
  for (std::size_t o = 0; o < shape.out_channels; ++o) {
    for (std::size_t c = 0; c < shape.in_channels; ++c) {
      for (std::size_t h = 0; h < shape.height; ++h) {
        for (std::size_t s = 0; s < shape.width; ++s) w(conv_row_index(shape, c, h, s), o) = filter[t++];
      }
    }
  }
  return w;
}

std::vector<double> conv_unreshape(const Matrix& weight, const ConvShape& shape) {
  if (weight.rows() != shape.fan_in() || weight.cols() != shape.out_channels) {
    throw DimensionError("conv_unreshape: weight " + weight.shape_string() +
                         " does not match filter shape");
  }
  std::vector<double> filter;
  filter.reserve(shape.size());
  for (std::size_t o = 0; o < shape.out_channels; ++o) {
    for (std::size_t c = 0; c < shape.in_channels; ++c) {
      for (std::size_t h = 0; h < shape.height; ++h) {
        for (std::size_t s = 0; s < shape.width; ++s) {
          filter.push_back(weight(conv_row_index(shape, c, h, s), o));
        }
      }
    }
  }
  return filter;
}

ConvShape conv_shape_from(std::span<const std::size_t> raw_shape) {
  if (raw_shape.size() != 4) throw DimensionError("conv layer needs a 4-axis shape");
  return ConvShape{raw_shape[0], raw_shape[1], raw_shape[2], raw_shape[3]};
}

void save_bundle(const fs::path& dir, std::span<const LayerSpec> layers) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["layers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (!layer.or_eligible()) {
      throw BundleError("save_bundle: layer '" + layer.name + "' is not linear or conv");
    }
    std::ostringstream file;
    file << "layer_" << (i < 10 ? "0" : "") << i << ".matx";
    Matrix stored = layer.weight;
    if (layer.kind == LayerKind::conv) {
      const ConvShape shape = conv_shape_from(layer.raw_shape);
      stored = Matrix(shape.out_channels, shape.fan_in(), conv_unreshape(layer.weight, shape));
    }
    write_matx(stored, dir / file.str());
    std::vector<std::size_t> shape = layer.raw_shape;
    if (shape.empty()) shape = {layer.weight.rows(), layer.weight.cols()};
    manifest["layers"].push_back({{"name", layer.name},
                                  {"kind", std::string(to_string(layer.kind))},
                                  {"shape", shape},
                                  {"file", file.str()}});
  }
  write_text(dir / kManifestName, manifest.dump(2) + "\n");
}

std::vector<LayerSpec> load_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(manifest_path.string() + ": invalid JSON (" + e.what() + ")");
  } catch (const std::runtime_error& e) {
    throw BundleError(e.what());
  }
  if (!manifest.is_object() || !manifest.contains("layers") || !manifest["layers"].is_array()) {
    throw BundleError(manifest_path.string() + ": missing \"layers\" array");
  }
  std::vector<LayerSpec> layers;
  for (const auto& entry : manifest["layers"]) {
    LayerSpec layer;
    try {
      layer.name = entry.at("name").get<std::string>();
      layer.kind = layer_kind_from_string(entry.at("kind").get<std::string>());
      layer.raw_shape = entry.at("shape").get<std::vector<std::size_t>>();
      const auto file = entry.at("file").get<std::string>();
      const Matrix stored = read_matx(dir / file);
      if (layer.kind == LayerKind::conv) {
        const ConvShape shape = conv_shape_from(layer.raw_shape);
        if (stored.size() != shape.size()) throw BundleError(file + ": size does not match shape");
        layer.weight = conv_reshape(stored.data(), shape);
      } else if (layer.kind == LayerKind::linear) {
        if (layer.raw_shape.size() != 2 || layer.raw_shape[0] != stored.rows() ||
            layer.raw_shape[1] != stored.cols()) {
          throw BundleError(file + ": matrix " + stored.shape_string() + " does not match shape");
        }
        layer.weight = stored;
      } else {
        throw BundleError("layer '" + layer.name + "': kind must be linear or conv");
      }
    } catch (const nlohmann::json::exception& e) {
      throw BundleError(manifest_path.string() + ": malformed layer entry (" + e.what() + ")");
    } catch (const std::invalid_argument& e) {
      throw BundleError(manifest_path.string() + ": " + e.what());
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace ortho::io
