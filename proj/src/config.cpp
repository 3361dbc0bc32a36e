#include "specfno/config.hpp"

#include <cstdlib>
#include <cmath>
#include <fstream>
#include <limits>
#include <functional>
#include <map>
#include <sstream>
#include <variant>

#define TOML_EXCEPTIONS 1
#define TOML_ENABLE_FORMATTERS 1
#include <toml.hpp>

#include "specfno/errors.hpp"

namespace specfno::config {
namespace {

using Slot = std::variant<int*, double*, bool*, std::uint64_t*, std::string*, std::vector<int>*, std::vector<double>*,
                          std::vector<std::string>*>;

struct Binding {
  const char* table;
  const char* key;
  Slot slot;
};

// One entry per accepted key; drives parsing, echo and unknown-key checks.
std::vector<Binding> bindings(RunConfig& c) {
  return {
      {"run", "seed", &c.run.seed},
      {"run", "output_dir", &c.run.output_dir},
      {"run", "threads", &c.run.threads},
      {"model", "dim", &c.model.dim},
      {"model", "width", &c.model.width},
      {"model", "layers", &c.model.layers},
      {"model", "modes", &c.model.modes},
      {"model", "activation", &c.model.activation},
      {"model", "encoding", &c.model.encoding},
      {"model", "proj_activation", &c.model.proj_activation},
      {"model", "init", &c.model.init},
      {"model", "init_scale", &c.model.init_scale},
      {"grf", "s", &c.grf.s},
      {"grf", "tau", &c.grf.tau},
      {"grf", "n_ref", &c.grf.n_ref},
      {"grf", "count", &c.grf.count},
      {"grf", "min_wavenumber", &c.grf.min_wavenumber},
      {"experiment", "s_list", &c.experiment.s_list},
      {"experiment", "n_list", &c.experiment.n_list},
      {"experiment", "n_ref", &c.experiment.n_ref},
      {"experiment", "n_samples", &c.experiment.n_samples},
      {"experiment", "lifting", &c.experiment.lifting},
      {"experiment", "fit_min_n", &c.experiment.fit_min_n},
      {"experiment", "fit_max_n", &c.experiment.fit_max_n},
      {"experiment", "s", &c.experiment.s},
      {"experiment", "n", &c.experiment.n},
      {"experiment", "n_seeds", &c.experiment.n_seeds},
      {"experiment", "inits", &c.experiment.inits},
      {"train", "dataset", &c.train.dataset},
      {"train", "s", &c.train.s},
      {"train", "n_ref", &c.train.n_ref},
      {"train", "n_train", &c.train.n_train},
      {"train", "n_val", &c.train.n_val},
      {"train", "n_test", &c.train.n_test},
      {"train", "epochs", &c.train.epochs},
      {"train", "batch_size", &c.train.batch_size},
      {"train", "step", &c.train.step},
      {"train", "beta1", &c.train.beta1},
      {"train", "beta2", &c.train.beta2},
      {"train", "eps", &c.train.eps},
      {"train", "loss", &c.train.loss},
      {"train", "grid", &c.train.grid},
      {"scheduler", "ladder", &c.scheduler.ladder},
      {"scheduler", "patience", &c.scheduler.patience},
      {"scheduler", "delta", &c.scheduler.delta},
      {"gradcheck", "width", &c.gradcheck.width},
      {"gradcheck", "modes", &c.gradcheck.modes},
      {"gradcheck", "layers", &c.gradcheck.layers},
      {"gradcheck", "n", &c.gradcheck.n},
      {"gradcheck", "samples", &c.gradcheck.samples},
      {"gradcheck", "coordinates", &c.gradcheck.coordinates},
      {"gradcheck", "h", &c.gradcheck.h},
      {"gradcheck", "tolerance", &c.gradcheck.tolerance},
      {"gradcheck", "datasets", &c.gradcheck.datasets},
      {"gradcheck", "losses", &c.gradcheck.losses},
  };
}

[[noreturn]] void type_error(const std::string& where, const char* expected) {
  throw ConfigError(where + ": expected " + expected);
}

int read_int(const toml::node& n, const std::string& where) {
  const auto v = n.value_exact<std::int64_t>();
  if (!v) type_error(where, "an integer");
  if (*v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) type_error(where, "a 32-bit integer");
  return int(*v);
}

double read_double(const toml::node& n, const std::string& where) {
  if (n.is_floating_point()) return *n.value_exact<double>();
  if (n.is_integer()) return double(*n.value_exact<std::int64_t>());
  type_error(where, "a number");
}

template <class T, class F>
std::vector<T> read_array(const toml::node& n, const std::string& where, F&& read) {
  const toml::array* a = n.as_array();
  if (!a) type_error(where, "an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < a->size(); ++i) out.push_back(read((*a)[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::string read_string(const toml::node& n, const std::string& where) {
  const auto v = n.value_exact<std::string>();
  if (!v) type_error(where, "a string");
  return *v;
}

void assign(const Slot& slot, const toml::node& n, const std::string& where) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, int>) {
          *p = read_int(n, where);
        } else if constexpr (std::is_same_v<T, double>) {
          *p = read_double(n, where);
        } else if constexpr (std::is_same_v<T, bool>) {
          const auto v = n.value_exact<bool>();
          if (!v) type_error(where, "a boolean");
          *p = *v;
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          const auto v = n.value_exact<std::int64_t>();
          if (!v || *v < 0) type_error(where, "a non-negative integer");
          *p = std::uint64_t(*v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          *p = read_string(n, where);
        } else if constexpr (std::is_same_v<T, std::vector<int>>) {
          *p = read_array<int>(n, where, read_int);
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          *p = read_array<double>(n, where, read_double);
        } else {
          *p = read_array<std::string>(n, where, read_string);
        }
      },
      slot);
}

void emit(const Slot& slot, toml::table& t, const char* key) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, int>) {
          t.insert_or_assign(key, std::int64_t(*p));
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          t.insert_or_assign(key, std::int64_t(*p));
        } else if constexpr (std::is_same_v<T, double> || std::is_same_v<T, bool> || std::is_same_v<T, std::string>) {
          t.insert_or_assign(key, *p);
        } else {
          toml::array a;
          for (const auto& v : *p) {
            if constexpr (std::is_same_v<T, std::vector<int>>) {
              a.push_back(std::int64_t(v));
            } else {
              a.push_back(v);
            }
          }
          t.insert_or_assign(key, std::move(a));
        }
      },
      slot);
}

void apply_override(toml::table& root, const std::string& item) {
  const auto eq = item.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects table.key=value, got '" + item + "'");
  const std::string path = item.substr(0, eq);
  const std::string value = item.substr(eq + 1);
  const auto dot = path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
    throw ConfigError("--set key must be table.key, got '" + path + "'");
  }
  const std::string table = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);

  toml::table parsed;
  try {
    parsed = toml::parse("v = " + value);
  } catch (const toml::parse_error&) {
    parsed.insert_or_assign("v", value);  // bare word: a string
  }
  if (!root.contains(table)) root.insert_or_assign(table, toml::table{});
  toml::table* t = root[table].as_table();
  if (!t) throw ConfigError("'" + table + "' is not a table");
  t->insert_or_assign(key, *parsed.get("v"));
}

RunConfig from_table(const toml::table& root) {
  RunConfig c;
  std::map<std::string, std::map<std::string, Slot>> index;
  for (const Binding& b : bindings(c)) index[b.table][b.key] = b.slot;

  for (auto&& [tname, tnode] : root) {
    const std::string table(tname.str());
    const auto it = index.find(table);
    if (it == index.end()) throw ConfigError("unknown config table [" + table + "]");
    const toml::table* t = tnode.as_table();
    if (!t) throw ConfigError("'" + table + "' must be a table");
    for (auto&& [kname, knode] : *t) {
      const std::string key(kname.str());
      const auto slot = it->second.find(key);
      if (slot == it->second.end()) throw ConfigError("unknown config key " + table + "." + key);
      assign(slot->second, knode, table + "." + key);
    }
  }
  c.validate();
  return c;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

fno::InitScheme parse_init(const std::string& s) {
  if (s == "default") return fno::InitScheme::standard();
  if (s == "all_ones") return fno::InitScheme::all_ones();
  if (s.rfind("scaled(", 0) == 0 && s.size() > 8 && s.back() == ')') {
    const std::string arg = s.substr(7, s.size() - 8);
    char* end = nullptr;
    const double c = std::strtod(arg.c_str(), &end);
    if (end == arg.c_str() + arg.size() && std::isfinite(c) && c > 0.0) return fno::InitScheme::scaled(c);
  }
  throw ConfigError("unknown init scheme '" + s + "' (expected default, scaled(c) or all_ones)");
}

void RunConfig::validate() const {
  require(run.threads >= 1, "run.threads must be >= 1");

  fno::parse_activation(model.activation);
  fno::parse_encoding(model.encoding);
  require(model.init == "default" || model.init == "scaled" || model.init == "all_ones",
          "model.init must be default, scaled or all_ones");
  require(std::isfinite(model.init_scale) && model.init_scale > 0.0, "model.init_scale must be > 0");
  model_config(1, 1).validate();

  require(grf.s > 0.0, "grf.s must be > 0");
  require(grf.tau > 0.0, "grf.tau must be > 0");
  require(is_power_of_two(grf.n_ref), "grf.n_ref must be a power of two");
  require(grf.count >= 1, "grf.count must be >= 1");
  require(grf.min_wavenumber >= 0.0, "grf.min_wavenumber must be >= 0");

  require(!experiment.s_list.empty(), "experiment.s_list is empty");
  for (double s : experiment.s_list) require(s > 0.0, "experiment.s_list entries must be > 0");
  require(!experiment.n_list.empty(), "experiment.n_list is empty");
  for (std::size_t i = 0; i < experiment.n_list.size(); ++i) {
    require(experiment.n_list[i] >= 1, "experiment.n_list entries must be >= 1");
    require(i == 0 || experiment.n_list[i] > experiment.n_list[i - 1], "experiment.n_list must be strictly increasing");
  }
  require(is_power_of_two(experiment.n_ref), "experiment.n_ref must be a power of two");
  require(experiment.n_samples >= 1, "experiment.n_samples must be >= 1");
  analysis::parse_lifting(experiment.lifting);
  require(experiment.fit_min_n >= 0 && experiment.fit_max_n >= 0, "experiment fit window bounds must be >= 0");
  require(experiment.s > 0.0, "experiment.s must be > 0");
  require(experiment.n >= 1, "experiment.n must be >= 1");
  require(experiment.n_seeds >= 1, "experiment.n_seeds must be >= 1");
  require(!experiment.inits.empty(), "experiment.inits is empty");
  for (const auto& i : experiment.inits) parse_init(i);

  train::parse_dataset(train.dataset);
  train::parse_loss(train.loss);
  require(train.s > 0.0, "train.s must be > 0");
  require(is_power_of_two(train.n_ref), "train.n_ref must be a power of two");
  require(train.n_train >= 1, "train.n_train must be >= 1");
  require(train.n_val >= 1, "train.n_val must be >= 1");
  require(train.n_test >= 1, "train.n_test must be >= 1");
  train_config().validate();

  require(!scheduler.ladder.empty(), "scheduler.ladder is empty");
  require(scheduler.patience >= 1, "scheduler.patience must be >= 1");
  require(scheduler.delta >= 0.0 && scheduler.delta < 1.0, "scheduler.delta must lie in [0, 1)");
  for (std::size_t i = 1; i < scheduler.ladder.size(); ++i) {
    require(scheduler.ladder[i] > scheduler.ladder[i - 1], "scheduler.ladder must be strictly increasing");
  }

  require(gradcheck.width >= 1 && gradcheck.modes >= 1 && gradcheck.layers >= 1, "gradcheck model sizes must be >= 1");
  require(gradcheck.n >= 1, "gradcheck.n must be >= 1");
  require(gradcheck.samples >= 1, "gradcheck.samples must be >= 1");
  require(gradcheck.coordinates >= 1, "gradcheck.coordinates must be >= 1");
  require(gradcheck.h > 0.0, "gradcheck.h must be > 0");
  require(gradcheck.tolerance > 0.0, "gradcheck.tolerance must be > 0");
  require(!gradcheck.datasets.empty() && !gradcheck.losses.empty(), "gradcheck datasets and losses must be non-empty");
  for (const auto& d : gradcheck.datasets) train::parse_dataset(d);
  for (const auto& l : gradcheck.losses) train::parse_loss(l);
}

std::string RunConfig::echo() const {
  RunConfig copy = *this;
  toml::table root;
  for (const Binding& b : bindings(copy)) {
    if (!root.contains(b.table)) root.insert_or_assign(b.table, toml::table{});
    emit(b.slot, *root[b.table].as_table(), b.key);
  }
  std::ostringstream out;
  out << root << "\n";
  return out.str();
}

fno::FnoConfig RunConfig::model_config(int in_channels, int out_channels) const {
  fno::FnoConfig c;
  c.dim = model.dim;
  c.in_channels = in_channels;
  c.out_channels = out_channels;
  c.width = model.width;
  c.layers = model.layers;
  c.modes = model.modes;
  c.activation = fno::parse_activation(model.activation);
  c.encoding = fno::parse_encoding(model.encoding);
  c.proj_activation = model.proj_activation;
  return c;
}

fno::InitScheme RunConfig::init_scheme() const {
  if (model.init == "scaled") return fno::InitScheme::scaled(model.init_scale);
  return parse_init(model.init);
}

analysis::FitWindow RunConfig::fit_window() const {
  analysis::FitWindow w;
  w.min_n = experiment.fit_min_n;
  if (experiment.fit_max_n > 0) w.max_n = experiment.fit_max_n;
  return w;
}

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig t;
  t.epochs = train.epochs;
  t.batch_size = train.batch_size;
  t.adam = {train.step, train.beta1, train.beta2, train.eps};
  t.loss = train::parse_loss(train.loss);
  t.grid = train.grid;
  t.seed = run.seed;
  return t;
}

train::SchedulerConfig RunConfig::scheduler_config() const {
  return {scheduler.ladder, scheduler.patience, scheduler.delta};
}

std::filesystem::path RunConfig::output_dir() const {
  if (!run.output_dir.empty()) return run.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "specfno_out";
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config parse error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  for (const auto& o : overrides) apply_override(root, o);
  return from_table(root);
}

RunConfig load_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides) {
  if (!path) return parse_config("", overrides);
  std::ifstream in(*path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path->string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

}  // namespace specfno::config
