#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "specfno/fno.hpp"
#include "specfno/grid.hpp"

// Manifest + payload container shared by checkpoints and field exports.
//   <stem>.json  {"format": 1, "kind": ..., "meta": {...}, "payload": "<stem>.bin",
//                 "tensors": [{name, shape, dtype, byte_offset, byte_len}]}
//   <stem>.bin   little-endian f64, complex stored as interleaved (re, im),
//                row-major, tensors back to back in manifest order.
namespace specfno::io {

inline constexpr int kContainerFormat = 1;

struct Tensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::variant<std::vector<double>, std::vector<Complex>> data;

  std::string dtype() const { return data.index() == 0 ? "f64" : "c128"; }
  std::size_t elements() const;
};

struct Container {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<Tensor> tensors;

  const Tensor& get(const std::string& name) const;
};

/// Writes <path> (the manifest) and its payload next to it with extension .bin.
void write_container(const std::filesystem::path& manifest, const Container& c);
Container read_container(const std::filesystem::path& manifest);

void save_params(const fno::FnoParams& params, const std::filesystem::path& manifest);
fno::FnoParams load_params(const std::filesystem::path& manifest);

void save_field(const GridField& field, const std::filesystem::path& manifest);
GridField load_field(const std::filesystem::path& manifest);

nlohmann::json config_to_json(const fno::FnoConfig& config);
fno::FnoConfig config_from_json(const nlohmann::json& j);

}  // namespace specfno::io
