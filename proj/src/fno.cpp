#include "specfno/fno.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "specfno/errors.hpp"
#include "specfno/fft.hpp"
#include "specfno/rng.hpp"
#include "specfno/spectral.hpp"

namespace specfno::fno {
namespace {

bool lex_positive(const Freq& k) { return k[0] > 0 || (k[0] == 0 && k[1] > 0); }

// Spectral data restricted to the columns that carry kernel modes. For d = 2
// the layout per channel is [N rows][N/2+1 half columns] with only columns
// 0..m filled; for d = 1 it is [N/2+1].
struct HalfSpectrum {
  int dim = 1;
  int n = 0;
  int h = 0;
  int m = 0;
  int channels = 0;
  std::vector<Complex> data;

  std::size_t block() const { return dim == 1 ? std::size_t(h) : std::size_t(n) * h; }
  Complex* channel(int c) { return data.data() + c * block(); }
  const Complex* channel(int c) const { return data.data() + c * block(); }
  // Offset of a mode with nonnegative last component.
  std::size_t offset(const Freq& k) const {
    return dim == 1 ? std::size_t(k[0]) : std::size_t(freq_to_bin(k[0], n)) * h + k[1];
  }
  bool stored(const Freq& k) const { return dim == 1 ? k[0] >= 0 : k[1] >= 0; }
  // Coefficient at any mode, mirrored through Hermitian symmetry when needed.
  Complex at(const Freq& k, int c) const {
    if (stored(k)) return channel(c)[offset(k)];
    return std::conj(channel(c)[offset({-k[0], -k[1]})]);
  }
};

HalfSpectrum partial_forward(const GridField& v, int m) {
  HalfSpectrum x;
  x.dim = v.dim();
  x.n = v.n();
  x.h = fft::half_length(v.n());
  x.m = m;
  x.channels = v.channels();
  x.data.assign(x.block() * x.channels, Complex(0.0, 0.0));
  const int rows = v.dim() == 1 ? v.channels() : v.channels() * v.n();
  fft::r2c_rows(v.n(), rows, v.values().data(), x.data.data());
  if (v.dim() == 2) {
    for (int c = 0; c < x.channels; ++c) {
      fft::c2c_strided(x.n, m + 1, x.h, 1, x.channel(c), fft::Direction::forward);
    }
  }
  return x;
}

// Inverse of partial_forward for a spectrum whose nonzero columns are 0..m.
GridField partial_inverse(HalfSpectrum& y) {
  GridField out(y.dim, y.n, y.channels);
  if (y.dim == 2) {
    for (int c = 0; c < y.channels; ++c) {
      fft::c2c_strided(y.n, y.m + 1, y.h, 1, y.channel(c), fft::Direction::backward);
    }
  }
  const int rows = y.dim == 1 ? y.channels : y.channels * y.n;
  fft::c2r_rows(y.n, rows, y.data.data(), out.values().data());
  return out;
}

// Bound on the max-norm imaginary part the c2r discards: the Hermitian defect
// of the self-conjugate column (last component 0).
double discarded_imag_bound(const HalfSpectrum& y, const ModeSet& modes) {
  const int m = modes.max_freq();
  double worst = 0.0;
  for (int c = 0; c < y.channels; ++c) {
    const Complex* col = y.channel(c);
    double sum = std::abs(col[0].imag());
    if (y.dim == 2) {
      // Pairs (a, 0) and (-a, 0) share one defect |y(a) - conj y(-a)| / 2 each.
      for (int a = 1; a <= m; ++a) {
        sum += std::abs(col[std::size_t(a) * y.h] - std::conj(col[std::size_t(y.n - a) * y.h]));
      }
    }
    worst = std::max(worst, sum);
  }
  return worst;
}

// y_o(k) = scale * sum_i weight(mode, o, i) x_i(k) over the stored half of
// the mode set, then back to physical space.
template <class WeightFn>
GridField apply_kernel(const GridField& v, const ModeSet& modes, int out_channels, WeightFn weight) {
  check_modes(modes.truncation(), v.n());
  const int m = modes.max_freq();
  const HalfSpectrum x = partial_forward(v, m);
  HalfSpectrum y;
  y.dim = x.dim;
  y.n = x.n;
  y.h = x.h;
  y.m = x.m;
  y.channels = out_channels;
  y.data.assign(y.block() * out_channels, Complex(0.0, 0.0));
  const double scale = 1.0 / double(grid_points(v.dim(), v.n()));
  for (const auto& mode : modes.all()) {
    if (!x.stored(mode.freq)) continue;
    const std::size_t off = x.offset(mode.freq);
    for (int o = 0; o < out_channels; ++o) {
      Complex acc(0.0, 0.0);
      for (int i = 0; i < v.channels(); ++i) acc += weight(mode, o, i) * x.channel(i)[off];
      y.channel(o)[off] = acc * scale;
    }
  }
  const double residue = discarded_imag_bound(y, modes);
  GridField out = partial_inverse(y);
  double peak = 0.0;
  for (double value : out.values()) peak = std::max(peak, std::abs(value));
  if (residue > spectral::kImagResidueTolerance * std::max(1.0, peak)) {
    throw NumericalError("spectral_conv: imaginary residue " + std::to_string(residue) + " exceeds tolerance");
  }
  return out;
}

std::size_t weight_index(int canonical, int out, int in, int out_channels, int in_channels) {
  return (std::size_t(canonical) * out_channels + out) * in_channels + in;
}

double matrix_2norm(const Dense& a) {
  if (a.rows == 0 || a.cols == 0) return 0.0;
  Eigen::MatrixXd m(a.rows, a.cols);
  for (int r = 0; r < a.rows; ++r) {
    for (int c = 0; c < a.cols; ++c) m(r, c) = a(r, c);
  }
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

double euclid(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::gelu: return "gelu";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "?";
}

std::string to_string(Encoding e) {
  switch (e) {
    case Encoding::none: return "none";
    case Encoding::periodic: return "periodic";
    case Encoding::nonperiodic: return "nonperiodic";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "gelu") return Activation::gelu;
  if (s == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + s + "' (expected gelu or relu)");
}

Encoding parse_encoding(const std::string& s) {
  if (s == "none") return Encoding::none;
  if (s == "periodic") return Encoding::periodic;
  if (s == "nonperiodic") return Encoding::nonperiodic;
  throw ConfigError("unknown encoding '" + s + "' (expected none, periodic or nonperiodic)");
}

void FnoConfig::validate() const {
  if (dim != 1 && dim != 2) throw ConfigError("fno: dim must be 1 or 2");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("fno: channel counts must be >= 1");
  if (width < 1) throw ConfigError("fno: width must be >= 1");
  if (layers < 1) throw ConfigError("fno: layers must be >= 1");
  if (modes < 1) throw ConfigError("fno: modes must be >= 1");
}

int FnoConfig::encoding_channels() const {
  switch (encoding) {
    case Encoding::none: return 0;
    case Encoding::periodic: return 2 * dim;
    case Encoding::nonperiodic: return dim;
  }
  return 0;
}

ModeSet::ModeSet(int dim, int k) : dim_(dim), k_(k) {
  if (dim != 1 && dim != 2) throw PreconditionError("ModeSet: dim must be 1 or 2");
  if (k < 1) throw PreconditionError("ModeSet: K must be >= 1");
  // [[K]] U -[[K]] per axis is {-K/2 .. K/2} for even K, [[K]] itself for odd K.
  max_freq_ = std::max(-freq_min(k), freq_max(k));
  const int lo1 = dim == 2 ? -max_freq_ : 0;
  const int hi1 = dim == 2 ? max_freq_ : 0;
  canonical_.push_back({0, 0});
  for (int a = -max_freq_; a <= max_freq_; ++a) {
    for (int b = lo1; b <= hi1; ++b) {
      const Freq f = dim == 2 ? Freq{a, b} : Freq{a, 0};
      if (lex_positive(f)) canonical_.push_back(f);
    }
  }
  const auto find = [this](const Freq& f) {
    return int(std::find(canonical_.begin(), canonical_.end(), f) - canonical_.begin());
  };
  for (int a = -max_freq_; a <= max_freq_; ++a) {
    for (int b = lo1; b <= hi1; ++b) {
      const Freq f = dim == 2 ? Freq{a, b} : Freq{a, 0};
      if (f == Freq{0, 0} || lex_positive(f)) {
        all_.push_back({f, find(f), false});
      } else {
        all_.push_back({f, find({-f[0], -f[1]}), true});
      }
    }
  }
}

FnoParams FnoParams::zeros(const FnoConfig& config) {
  config.validate();
  FnoParams p;
  p.config = config;
  p.modes = ModeSet(config.dim, config.modes);
  const int w = config.width;
  p.lift_w = Dense(w, config.lifted_channels());
  p.lift_b.assign(w, 0.0);
  p.layers.resize(config.layers);
  for (auto& layer : p.layers) {
    layer.w = Dense(w, w);
    layer.b.assign(w, 0.0);
    layer.p.assign(p.modes.canonical().size() * w * w, Complex(0.0, 0.0));
  }
  p.proj_w = Dense(config.out_channels, w);
  p.proj_b.assign(config.out_channels, 0.0);
  return p;
}

Complex FnoParams::spectral_weight(int layer, const ModeSet::Mode& mode, int out, int in) const {
  const int w = config.width;
  const Complex value = layers[layer].p[weight_index(mode.canonical, out, in, w, w)];
  return mode.mirrored ? std::conj(value) : value;
}

std::size_t FnoParams::scalar_count() const {
  const std::size_t w = config.width;
  const std::size_t canon = modes.canonical().size();
  const std::size_t per_layer = w * w + w + (2 * canon - 1) * w * w;
  return lift_w.data.size() + lift_b.size() + layers.size() * per_layer + proj_w.data.size() + proj_b.size();
}

std::vector<double> FnoParams::pack() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  const auto append = [&flat](std::span<const double> v) { flat.insert(flat.end(), v.begin(), v.end()); };
  const std::size_t ww = std::size_t(config.width) * config.width;
  append(lift_w.data);
  append(lift_b);
  for (const auto& layer : layers) {
    append(layer.w.data);
    append(layer.b);
    for (std::size_t j = 0; j < layer.p.size(); ++j) {
      flat.push_back(layer.p[j].real());
      if (j >= ww) flat.push_back(layer.p[j].imag());
    }
  }
  append(proj_w.data);
  append(proj_b);
  return flat;
}

void FnoParams::unpack(std::span<const double> flat) {
  if (flat.size() != scalar_count()) {
    throw PreconditionError("FnoParams::unpack: expected " + std::to_string(scalar_count()) + " scalars, got " +
                            std::to_string(flat.size()));
  }
  std::size_t pos = 0;
  const auto take = [&](std::span<double> v) {
    std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
    pos += v.size();
  };
  const std::size_t ww = std::size_t(config.width) * config.width;
  take(lift_w.data);
  take(lift_b);
  for (auto& layer : layers) {
    take(layer.w.data);
    take(layer.b);
    for (std::size_t j = 0; j < layer.p.size(); ++j) {
      const double re = flat[pos++];
      const double im = j >= ww ? flat[pos++] : 0.0;
      layer.p[j] = Complex(re, im);
    }
  }
  take(proj_w.data);
  take(proj_b);
}

std::string InitScheme::name() const {
  switch (kind) {
    case InitKind::standard: return "default";
    case InitKind::scaled: {
      std::string c = std::to_string(scale);
      c.erase(c.find_last_not_of('0') + 1);
      if (c.back() == '.') c.pop_back();
      return "scaled(" + c + ")";
    }
    case InitKind::all_ones: return "all_ones";
  }
  return "?";
}

FnoParams init_params(const FnoConfig& config, InitScheme scheme, std::uint64_t seed) {
  FnoParams p = FnoParams::zeros(config);
  if (scheme.kind == InitKind::all_ones) {
    std::fill(p.lift_w.data.begin(), p.lift_w.data.end(), 1.0);
    std::fill(p.lift_b.begin(), p.lift_b.end(), 1.0);
    for (auto& layer : p.layers) {
      std::fill(layer.w.data.begin(), layer.w.data.end(), 1.0);
      std::fill(layer.b.begin(), layer.b.end(), 1.0);
      std::fill(layer.p.begin(), layer.p.end(), Complex(1.0, 0.0));
    }
    std::fill(p.proj_w.data.begin(), p.proj_w.data.end(), 1.0);
    std::fill(p.proj_b.begin(), p.proj_b.end(), 1.0);
    return p;
  }
  const double c = scheme.kind == InitKind::scaled ? scheme.scale : 1.0;
  const CounterRng rng(seed);
  std::uint64_t tensor = 0;
  const auto fill_uniform = [&](std::span<double> v, double bound) {
    const CounterRng stream = rng.split(tensor++);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = c * stream.uniform(j, -bound, bound);
  };
  const int w = config.width;
  const double lift_bound = 1.0 / std::sqrt(double(config.lifted_channels()));
  const double bound = 1.0 / std::sqrt(double(w));
  const double spectral_bound = 1.0 / (double(w) * w);
  const std::size_t ww = std::size_t(w) * w;
  fill_uniform(p.lift_w.data, lift_bound);
  fill_uniform(p.lift_b, lift_bound);
  for (auto& layer : p.layers) {
    fill_uniform(layer.w.data, bound);
    fill_uniform(layer.b, bound);
    const CounterRng stream = rng.split(tensor++);
    for (std::size_t j = 0; j < layer.p.size(); ++j) {
      const double re = stream.uniform(2 * j, 0.0, spectral_bound);
      const double im = j >= ww ? stream.uniform(2 * j + 1, 0.0, spectral_bound) : 0.0;
      layer.p[j] = c * Complex(re, im);
    }
  }
  fill_uniform(p.proj_w.data, bound);
  fill_uniform(p.proj_b, bound);
  return p;
}

double ParamNorms::bound() const {
  double m = std::max({1.0, lift_nn, proj_nn});
  for (double x : p_frobenius) m = std::max(m, x);
  for (double x : w_spectral) m = std::max(m, x);
  for (double x : b_norm) m = std::max(m, x);
  return m;
}

ParamNorms parameter_norms(const FnoParams& params) {
  ParamNorms out;
  const std::size_t ww = std::size_t(params.config.width) * params.config.width;
  for (const auto& layer : params.layers) {
    double sum = 0.0;
    for (std::size_t j = 0; j < layer.p.size(); ++j) {
      // Every canonical mode except k = 0 also appears mirrored.
      sum += (j < ww ? 1.0 : 2.0) * std::norm(layer.p[j]);
    }
    out.p_frobenius.push_back(std::sqrt(sum));
    out.w_spectral.push_back(matrix_2norm(layer.w));
    out.b_norm.push_back(euclid(layer.b));
  }
  out.lift_nn = std::hypot(euclid(params.lift_w.data), euclid(params.lift_b));
  out.proj_nn = std::hypot(euclid(params.proj_w.data), euclid(params.proj_b));
  return out;
}

double standard_init_bound(const FnoConfig& config) {
  const double w = config.width;
  const double din = config.lifted_channels();
  const double full_modes = double(ModeSet(config.dim, config.modes).all().size());
  const double p_bound = std::sqrt(2.0 * full_modes) / w;  // |P entry| <= sqrt(2)/w^2
  const double wb_bound = 1.0;                             // ||W||_2 <= ||W||_F <= 1, |b| <= 1
  const double lift = std::sqrt(w + w / din);
  const double proj = std::sqrt(config.out_channels * (1.0 + 1.0 / w));
  return std::max({1.0, p_bound, wb_bound, lift, proj});
}

GridField append_encoding(const GridField& f, Encoding kind) {
  if (kind == Encoding::none) return f;
  const int extra = kind == Encoding::periodic ? 2 * f.dim() : f.dim();
  GridField out(f.dim(), f.n(), f.channels() + extra);
  std::copy(f.values().begin(), f.values().end(), out.values().begin());
  const double n = f.n();
  for (std::size_t pt = 0; pt < f.points(); ++pt) {
    const auto idx = f.index_of(pt);
    for (int axis = 0; axis < f.dim(); ++axis) {
      const double x = idx[axis] / n;
      if (kind == Encoding::periodic) {
        const double angle = 2.0 * std::numbers::pi * x;
        out.at(pt, f.channels() + 2 * axis) = std::sin(angle);
        out.at(pt, f.channels() + 2 * axis + 1) = std::cos(angle);
      } else {
        out.at(pt, f.channels() + axis) = x;
      }
    }
  }
  return out;
}

double activate(double x, Activation kind) {
  switch (kind) {
    case Activation::gelu: return 0.5 * x * std::erfc(-x * std::numbers::sqrt2 / 2.0);
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::identity: return x;
  }
  return x;
}

double activate_derivative(double x, Activation kind) {
  switch (kind) {
    case Activation::gelu: {
      const double cdf = 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
      const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
      return cdf + x * pdf;
    }
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

GridField activation_apply(const GridField& f, Activation kind, bool derivative) {
  GridField out = f;
  for (double& x : out.values()) x = derivative ? activate_derivative(x, kind) : activate(x, kind);
  return out;
}

void check_modes(int truncation, int n) {
  if (!(2 * truncation < n)) {
    throw ModeOverflowError("mode overflow: K = " + std::to_string(truncation) + " requires N > " +
                            std::to_string(2 * truncation) + ", got N = " + std::to_string(n));
  }
}

Activation state_activation(const FnoConfig& config, int l) {
  return l == 0 ? config.lift_activation : config.activation;
}

GridField spectral_conv(const GridField& v, std::span<const Complex> p, const ModeSet& modes, int out) {
  const int in = v.channels();
  if (p.size() != modes.canonical().size() * out * in) throw PreconditionError("spectral_conv: weight shape mismatch");
  return apply_kernel(v, modes, out, [&](const ModeSet::Mode& mode, int o, int i) {
    const Complex w = p[weight_index(mode.canonical, o, i, out, in)];
    return mode.mirrored ? std::conj(w) : w;
  });
}

GridField spectral_conv_adjoint(const GridField& grad_out, std::span<const Complex> p, const ModeSet& modes, int in) {
  const int out = grad_out.channels();
  if (p.size() != modes.canonical().size() * out * in) {
    throw PreconditionError("spectral_conv_adjoint: weight shape mismatch");
  }
  // Conjugate transpose of P(k) at every mode.
  return apply_kernel(grad_out, modes, in, [&](const ModeSet::Mode& mode, int i, int o) {
    const Complex w = p[weight_index(mode.canonical, o, i, out, in)];
    return mode.mirrored ? w : std::conj(w);
  });
}

std::vector<Complex> spectral_conv_weight_grad_full(const GridField& v, const GridField& grad_out,
                                                    const ModeSet& modes) {
  check_modes(modes.truncation(), v.n());
  if (v.dim() != grad_out.dim() || v.n() != grad_out.n()) {
    throw PreconditionError("spectral_conv_weight_grad: grid mismatch");
  }
  const HalfSpectrum x = partial_forward(v, modes.max_freq());
  const HalfSpectrum g = partial_forward(grad_out, modes.max_freq());
  const double scale = 1.0 / double(grid_points(v.dim(), v.n()));
  const int in = v.channels();
  const int out = grad_out.channels();
  std::vector<Complex> grad(modes.all().size() * out * in);
  for (std::size_t j = 0; j < modes.all().size(); ++j) {
    const Freq& k = modes.all()[j].freq;
    for (int o = 0; o < out; ++o) {
      const Complex gk = g.at(k, o);
      for (int i = 0; i < in; ++i) grad[weight_index(int(j), o, i, out, in)] = gk * std::conj(x.at(k, i)) * scale;
    }
  }
  return grad;
}

std::vector<Complex> spectral_conv_weight_grad(const GridField& v, const GridField& grad_out, const ModeSet& modes) {
  check_modes(modes.truncation(), v.n());
  if (v.dim() != grad_out.dim() || v.n() != grad_out.n()) {
    throw PreconditionError("spectral_conv_weight_grad: grid mismatch");
  }
  const HalfSpectrum x = partial_forward(v, modes.max_freq());
  const HalfSpectrum g = partial_forward(grad_out, modes.max_freq());
  const double scale = 1.0 / double(grid_points(v.dim(), v.n()));
  const int in = v.channels();
  const int out = grad_out.channels();
  std::vector<Complex> grad(modes.canonical().size() * out * in);
  for (std::size_t j = 0; j < modes.canonical().size(); ++j) {
    const Freq& k = modes.canonical()[j];
    for (int o = 0; o < out; ++o) {
      const Complex gk = g.at(k, o);
      for (int i = 0; i < in; ++i) {
        const Complex full = gk * std::conj(x.at(k, i)) * scale;
        // Folding P(-k) = conj P(k) doubles the gradient; k = 0 is real.
        grad[weight_index(int(j), o, i, out, in)] = j == 0 ? Complex(full.real(), 0.0) : 2.0 * full;
      }
    }
  }
  return grad;
}

GridField pointwise_affine(const GridField& v, const Dense& a, std::span<const double> b) {
  if (a.cols != v.channels() || b.size() != std::size_t(a.rows)) {
    throw PreconditionError("pointwise_affine: channel mismatch (" + std::to_string(v.channels()) + " inputs, " +
                            std::to_string(a.cols) + " expected)");
  }
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Index pts = Eigen::Index(v.points());
  GridField out(v.dim(), v.n(), a.rows);
  Eigen::Map<RowMat> dst(out.storage().data(), a.rows, pts);
  dst.noalias() = Eigen::Map<const RowMat>(a.data.data(), a.rows, a.cols) *
                  Eigen::Map<const RowMat>(v.storage().data(), a.cols, pts);
  dst.colwise() += Eigen::Map<const Eigen::VectorXd>(b.data(), a.rows);
  return out;
}

ForwardResult forward(const FnoParams& params, const GridField& a, bool capture_trace, bool capture_pre_activations) {
  const FnoConfig& cfg = params.config;
  if (a.dim() != cfg.dim) throw PreconditionError("forward: input dimension does not match the model");
  if (a.channels() != cfg.in_channels) {
    throw PreconditionError("forward: channel mismatch, input has " + std::to_string(a.channels()) +
                            " channels, model expects " + std::to_string(cfg.in_channels));
  }
  check_modes(cfg.modes, a.n());

  ForwardResult result;
  if (capture_trace) result.trace.emplace();
  const auto record = [&](const GridField& z, const GridField& v) {
    if (!capture_trace) return;
    result.trace->states.push_back(v);
    if (capture_pre_activations) result.trace->pre_activations.push_back(z);
  };

  GridField z = pointwise_affine(append_encoding(a, cfg.encoding), params.lift_w, params.lift_b);
  GridField v = activation_apply(z, cfg.lift_activation);
  record(z, v);
  for (const auto& layer : params.layers) {
    const GridField k = spectral_conv(v, layer.p, params.modes, cfg.width);
    z = pointwise_affine(v, layer.w, layer.b);
    for (std::size_t j = 0; j < z.size(); ++j) z.values()[j] += k.values()[j];
    v = activation_apply(z, cfg.activation);
    record(z, v);
  }
  result.output = pointwise_affine(v, params.proj_w, params.proj_b);
  if (cfg.proj_activation) result.output = activation_apply(result.output, Activation::gelu);
  return result;
}

}  // namespace specfno::fno
