#include "specfno/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>

#include "specfno/errors.hpp"

namespace specfno::io {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "payload writer assumes a little-endian host");

fs::path payload_path(const fs::path& manifest) {
  fs::path p = manifest;
  p.replace_extension(".bin");
  return p;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data, std::streamsize(size));
  if (!out) throw IoError("write failed: " + path.string());
}

Tensor real_tensor(std::string name, std::vector<std::int64_t> shape, std::vector<double> values) {
  return {std::move(name), std::move(shape), std::move(values)};
}

const std::vector<double>& real_data(const Tensor& t, std::size_t expected) {
  const auto* v = std::get_if<std::vector<double>>(&t.data);
  if (v == nullptr || v->size() != expected) {
    throw IoError("tensor '" + t.name + "' has dtype " + t.dtype() + " and " + std::to_string(t.elements()) +
                  " elements, expected f64 x " + std::to_string(expected));
  }
  return *v;
}

const std::vector<Complex>& complex_data(const Tensor& t, std::size_t expected) {
  const auto* v = std::get_if<std::vector<Complex>>(&t.data);
  if (v == nullptr || v->size() != expected) {
    throw IoError("tensor '" + t.name + "' has dtype " + t.dtype() + " and " + std::to_string(t.elements()) +
                  " elements, expected c128 x " + std::to_string(expected));
  }
  return *v;
}

}  // namespace

std::size_t Tensor::elements() const {
  return std::visit([](const auto& v) { return v.size(); }, data);
}

const Tensor& Container::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw IoError("container has no tensor '" + name + "'");
}

void write_container(const fs::path& manifest, const Container& c) {
  std::vector<char> payload;
  json entries = json::array();
  for (const auto& t : c.tensors) {
    const std::int64_t count =
        std::accumulate(t.shape.begin(), t.shape.end(), std::int64_t(1), std::multiplies<>());
    if (count != std::int64_t(t.elements())) throw PreconditionError("tensor '" + t.name + "' shape/data mismatch");
    const std::size_t offset = payload.size();
    std::visit(
        [&](const auto& v) {
          const std::size_t bytes = v.size() * sizeof(v[0]);
          payload.resize(offset + bytes);
          if (bytes > 0) std::memcpy(payload.data() + offset, v.data(), bytes);
        },
        t.data);
    entries.push_back({{"name", t.name},
                       {"shape", t.shape},
                       {"dtype", t.dtype()},
                       {"byte_offset", offset},
                       {"byte_len", payload.size() - offset}});
  }
  const fs::path bin = payload_path(manifest);
  const json doc = {{"format", kContainerFormat},
                    {"kind", c.kind},
                    {"meta", c.meta},
                    {"payload", bin.filename().string()},
                    {"tensors", entries}};
  write_bytes(bin, payload.data(), payload.size());
  const std::string text = doc.dump(2) + "\n";
  write_bytes(manifest, text.data(), text.size());
}

Container read_container(const fs::path& manifest) {
  json doc;
  try {
    doc = json::parse(read_text(manifest));
  } catch (const json::parse_error& e) {
    throw IoError("malformed manifest " + manifest.string() + ": " + e.what());
  }
  try {
    if (doc.at("format").get<int>() != kContainerFormat) {
      throw IoError("unsupported container format in " + manifest.string());
    }
    const fs::path bin = manifest.parent_path() / doc.at("payload").get<std::string>();
    const std::string payload = read_text(bin);
    Container c;
    c.kind = doc.at("kind").get<std::string>();
    c.meta = doc.at("meta");
    for (const auto& e : doc.at("tensors")) {
      Tensor t;
      t.name = e.at("name").get<std::string>();
      t.shape = e.at("shape").get<std::vector<std::int64_t>>();
      const auto dtype = e.at("dtype").get<std::string>();
      const auto offset = e.at("byte_offset").get<std::size_t>();
      const auto len = e.at("byte_len").get<std::size_t>();
      std::int64_t count = 1;
      for (auto s : t.shape) {
        if (s < 0) throw IoError("negative extent in tensor '" + t.name + "' of " + manifest.string());
        count *= s;
      }
      const std::size_t width = dtype == "f64" ? 8 : dtype == "c128" ? 16 : 0;
      if (width == 0) throw IoError("unknown dtype '" + dtype + "' in " + manifest.string());
      if (len != std::size_t(count) * width || offset > payload.size() || len > payload.size() - offset) {
        throw IoError("tensor '" + t.name + "' does not fit the payload " + bin.string());
      }
      if (width == 8) {
        std::vector<double> v(count);
        if (len > 0) std::memcpy(v.data(), payload.data() + offset, len);
        t.data = std::move(v);
      } else {
        std::vector<Complex> v(count);
        if (len > 0) std::memcpy(v.data(), payload.data() + offset, len);
        t.data = std::move(v);
      }
      c.tensors.push_back(std::move(t));
    }
    return c;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + manifest.string() + ": " + e.what());
  }
}

json config_to_json(const fno::FnoConfig& c) {
  return {{"dim", c.dim},
          {"in_channels", c.in_channels},
          {"out_channels", c.out_channels},
          {"width", c.width},
          {"layers", c.layers},
          {"modes", c.modes},
          {"activation", fno::to_string(c.activation)},
          {"lift_activation", fno::to_string(c.lift_activation)},
          {"proj_activation", c.proj_activation},
          {"encoding", fno::to_string(c.encoding)}};
}

fno::FnoConfig config_from_json(const json& j) {
  fno::FnoConfig c;
  try {
    c.dim = j.at("dim").get<int>();
    c.in_channels = j.at("in_channels").get<int>();
    c.out_channels = j.at("out_channels").get<int>();
    c.width = j.at("width").get<int>();
    c.layers = j.at("layers").get<int>();
    c.modes = j.at("modes").get<int>();
    const auto lift = j.at("lift_activation").get<std::string>();
    c.activation = fno::parse_activation(j.at("activation").get<std::string>());
    c.lift_activation = lift == "identity" ? fno::Activation::identity : fno::parse_activation(lift);
    c.proj_activation = j.at("proj_activation").get<bool>();
    c.encoding = fno::parse_encoding(j.at("encoding").get<std::string>());
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model config: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

void save_params(const fno::FnoParams& params, const fs::path& manifest) {
  const auto& cfg = params.config;
  const std::int64_t w = cfg.width;
  Container c;
  c.kind = "fno_params";
  c.meta = {{"config", config_to_json(cfg)}, {"canonical_modes", params.modes.canonical().size()}};
  c.tensors.push_back(real_tensor("lift_w", {w, cfg.lifted_channels()}, params.lift_w.data));
  c.tensors.push_back(real_tensor("lift_b", {w}, params.lift_b));
  for (std::size_t t = 0; t < params.layers.size(); ++t) {
    const std::string prefix = "layer" + std::to_string(t) + ".";
    c.tensors.push_back(real_tensor(prefix + "w", {w, w}, params.layers[t].w.data));
    c.tensors.push_back(real_tensor(prefix + "b", {w}, params.layers[t].b));
    c.tensors.push_back({prefix + "p", {std::int64_t(params.modes.canonical().size()), w, w}, params.layers[t].p});
  }
  c.tensors.push_back(real_tensor("proj_w", {cfg.out_channels, w}, params.proj_w.data));
  c.tensors.push_back(real_tensor("proj_b", {cfg.out_channels}, params.proj_b));
  write_container(manifest, c);
}

fno::FnoParams load_params(const fs::path& manifest) {
  const Container c = read_container(manifest);
  if (c.kind != "fno_params") throw IoError(manifest.string() + " is a '" + c.kind + "' container, not fno_params");
  fno::FnoParams p = fno::FnoParams::zeros(config_from_json(c.meta.at("config")));
  p.lift_w.data = real_data(c.get("lift_w"), p.lift_w.data.size());
  p.lift_b = real_data(c.get("lift_b"), p.lift_b.size());
  const std::size_t ww = std::size_t(p.config.width) * p.config.width;
  for (std::size_t t = 0; t < p.layers.size(); ++t) {
    const std::string prefix = "layer" + std::to_string(t) + ".";
    auto& layer = p.layers[t];
    layer.w.data = real_data(c.get(prefix + "w"), layer.w.data.size());
    layer.b = real_data(c.get(prefix + "b"), layer.b.size());
    layer.p = complex_data(c.get(prefix + "p"), layer.p.size());
    for (std::size_t j = 0; j < ww; ++j) {
      if (layer.p[j].imag() != 0.0) throw IoError("k = 0 spectral weight is not real in " + manifest.string());
    }
  }
  p.proj_w.data = real_data(c.get("proj_w"), p.proj_w.data.size());
  p.proj_b = real_data(c.get("proj_b"), p.proj_b.size());
  return p;
}

void save_field(const GridField& field, const fs::path& manifest) {
  Container c;
  c.kind = "grid_field";
  c.meta = {{"dim", field.dim()}, {"n", field.n()}, {"channels", field.channels()}};
  std::vector<std::int64_t> shape{field.channels()};
  for (int i = 0; i < field.dim(); ++i) shape.push_back(field.n());
  c.tensors.push_back(real_tensor("values", shape, field.storage()));
  write_container(manifest, c);
}

GridField load_field(const fs::path& manifest) {
  const Container c = read_container(manifest);
  if (c.kind != "grid_field") throw IoError(manifest.string() + " is a '" + c.kind + "' container, not grid_field");
  int dim = 0, n = 0, channels = 0;
  try {
    dim = c.meta.at("dim").get<int>();
    n = c.meta.at("n").get<int>();
    channels = c.meta.at("channels").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed field manifest " + manifest.string() + ": " + e.what());
  }
  if (dim < 1 || dim > 2 || n < 1 || channels < 1) throw IoError("bad field shape in " + manifest.string());
  GridField f(dim, n, channels);
  f.storage() = real_data(c.get("values"), f.size());
  return f;
}

}  // namespace specfno::io
