#include "specfno/train.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "specfno/errors.hpp"
#include "specfno/grf.hpp"
#include "specfno/rng.hpp"
#include "specfno/spectral.hpp"

namespace specfno::train {
namespace {

using fno::Dense;
using fno::FnoParams;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sum_squares(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// gw += g x^T summed over points, gb += sum of g over points.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> as_matrix(const GridField& f) {
  return {f.storage().data(), f.channels(), Eigen::Index(f.points())};
}

void accumulate_affine(Dense& gw, std::vector<double>& gb, const GridField& g, const GridField& x) {
  const auto gm = as_matrix(g);
  Eigen::Map<RowMat>(gw.data.data(), gw.rows, gw.cols).noalias() += gm * as_matrix(x).transpose();
  Eigen::Map<Eigen::VectorXd>(gb.data(), Eigen::Index(gb.size())) += gm.rowwise().sum();
}

// A^T g pointwise.
GridField transpose_apply(const Dense& a, const GridField& g) {
  GridField out(g.dim(), g.n(), a.cols);
  Eigen::Map<RowMat>(out.storage().data(), a.cols, Eigen::Index(g.points())).noalias() =
      Eigen::Map<const RowMat>(a.data.data(), a.rows, a.cols).transpose() * as_matrix(g);
  return out;
}

// g *= sigma'(z) pointwise.
void scale_by_derivative(GridField& g, const GridField& z, fno::Activation kind) {
  auto gv = g.values();
  const auto zv = z.values();
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= fno::activate_derivative(zv[i], kind);
}

void add_into(GridField& a, const GridField& b) {
  auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
}

// dL/dpred of one sample's loss.
GridField loss_gradient(const GridField& pred, const GridField& target, LossKind kind) {
  GridField g = pred;
  auto gv = g.values();
  const auto tv = target.values();
  const double points = double(pred.points());
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] -= tv[i];
  if (kind == LossKind::mse) {
    for (double& v : gv) v *= 2.0 / points;
    return g;
  }
  const double diff = std::sqrt(sum_squares(gv) / points);
  const double ref = std::sqrt(sum_squares(tv) / points);
  const double scale = diff > 0.0 ? 1.0 / (points * diff * ref) : 0.0;
  for (double& v : gv) v *= scale;
  return g;
}

GridField restrict_to(const GridField& f, int n) { return f.n() == n ? f : grf::subsample(f, n); }

using Real = long double;
using RealComplex = std::complex<Real>;

Real activate_ext(Real x, fno::Activation kind) {
  switch (kind) {
    case fno::Activation::gelu: return Real(0.5) * x * std::erfc(-x / std::sqrt(Real(2)));
    case fno::Activation::relu: return x > 0 ? x : Real(0);
    case fno::Activation::identity: return x;
  }
  return x;
}

// Channel-major extended-precision field on one grid.
struct ExtField {
  int channels = 0;
  std::size_t points = 0;
  std::vector<Real> v;
  Real& at(int c, std::size_t p) { return v[c * points + p]; }
  Real at(int c, std::size_t p) const { return v[c * points + p]; }
};

ExtField affine_ext(const ExtField& x, const Dense& a, std::span<const double> b) {
  ExtField out{a.rows, x.points, std::vector<Real>(std::size_t(a.rows) * x.points)};
  for (int o = 0; o < a.rows; ++o) {
    for (std::size_t p = 0; p < x.points; ++p) {
      Real acc = b[o];
      for (int i = 0; i < a.cols; ++i) acc += Real(a(o, i)) * x.at(i, p);
      out.at(o, p) = acc;
    }
  }
  return out;
}

ExtField output_ext(const FnoParams& params, const Sample& sample) {
  const auto& cfg = params.config;
  const GridField enc = fno::append_encoding(sample.input, cfg.encoding);
  const int n = enc.n();
  fno::check_modes(cfg.modes, n);
  const std::size_t points = enc.points();
  std::vector<std::array<int, 2>> index(points);
  for (std::size_t p = 0; p < points; ++p) index[p] = enc.index_of(p);
  std::vector<RealComplex> twiddle(n);  // e^{-2 pi i m / N}
  for (int m = 0; m < n; ++m) {
    const Real angle = -2 * std::numbers::pi_v<Real> * Real(m) / Real(n);
    twiddle[m] = {std::cos(angle), std::sin(angle)};
  }
  const auto& modes = params.modes.all();
  std::vector<int> phase(modes.size() * points);  // (k . index) mod N per mode and point
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const Freq& k = modes[m].freq;
    for (std::size_t p = 0; p < points; ++p) phase[m * points + p] = freq_to_bin(k[0] * index[p][0] + k[1] * index[p][1], n);
  }
  const Real inv_points = Real(1) / Real(points);

  ExtField x{enc.channels(), points, std::vector<Real>(enc.values().begin(), enc.values().end())};
  ExtField v = affine_ext(x, params.lift_w, params.lift_b);
  for (Real& e : v.v) e = activate_ext(e, cfg.lift_activation);

  for (int t = 0; t < cfg.layers; ++t) {
    const auto& layer = params.layers[t];
    const int w = cfg.width;
    // Direct DFT of every channel on the kernel modes.
    std::vector<RealComplex> c(modes.size() * w);
    for (std::size_t m = 0; m < modes.size(); ++m) {
      for (int i = 0; i < w; ++i) {
        RealComplex acc = 0;
        const int* ph = &phase[m * points];
        for (std::size_t p = 0; p < points; ++p) acc += v.at(i, p) * twiddle[ph[p]];
        c[m * w + i] = acc * inv_points;
      }
    }
    ExtField z = affine_ext(v, layer.w, layer.b);
    for (std::size_t m = 0; m < modes.size(); ++m) {
      for (int o = 0; o < w; ++o) {
        RealComplex y = 0;
        for (int i = 0; i < w; ++i) {
          const Complex pw = params.spectral_weight(t, modes[m], o, i);
          y += RealComplex(pw.real(), pw.imag()) * c[m * w + i];
        }
        const int* ph = &phase[m * points];
        for (std::size_t p = 0; p < points; ++p) {
          z.at(o, p) += y.real() * twiddle[ph[p]].real() + y.imag() * twiddle[ph[p]].imag();
        }
      }
    }
    for (Real& e : z.v) e = activate_ext(e, cfg.activation);
    v = std::move(z);
  }
  ExtField u = affine_ext(v, params.proj_w, params.proj_b);
  if (cfg.proj_activation) {
    for (Real& e : u.v) e = activate_ext(e, fno::Activation::gelu);
  }

  if (u.v.size() != sample.target.size()) throw PreconditionError("reference_loss: target shape differs from the output");
  return u;
}

struct ExtSums {
  Real diff = 0;  // sum (u - t)^2
  Real ref = 0;   // sum t^2
};

ExtSums sums_ext(const ExtField& u, const GridField& target) {
  ExtSums s;
  const auto t = target.values();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Real d = u.v[i] - Real(t[i]);
    s.diff += d * d;
    s.ref += Real(t[i]) * Real(t[i]);
  }
  if (s.ref == 0) throw PreconditionError("reference_loss: relative_l2 needs a nonzero target");
  return s;
}

Real loss_ext(const ExtSums& s, std::size_t points, LossKind kind) {
  return kind == LossKind::mse ? s.diff / Real(points) : std::sqrt(s.diff / s.ref);
}

// L(u_plus) - L(u_minus) with the squared residuals differenced as
// sum (u+ - u-)(u+ + u- - 2t), avoiding cancellation between two large losses.
Real loss_difference_ext(const ExtField& up, const ExtField& down, const GridField& target, LossKind kind) {
  const auto t = target.values();
  Real delta = 0;
  for (std::size_t i = 0; i < t.size(); ++i) delta += (up.v[i] - down.v[i]) * (up.v[i] + down.v[i] - 2 * Real(t[i]));
  if (kind == LossKind::mse) return delta / Real(up.points);
  const ExtSums a = sums_ext(up, target), b = sums_ext(down, target);
  return delta / (a.ref * (loss_ext(a, up.points, kind) + loss_ext(b, down.points, kind)));
}

double mean_relative_error(const FnoParams& params, const std::vector<Sample>& samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  return batch_loss(params, samples, LossKind::relative_l2);
}

}  // namespace

std::string to_string(DatasetKind k) { return k == DatasetKind::gradient_map ? "gradient_map" : "inverse_helmholtz"; }
std::string to_string(LossKind k) { return k == LossKind::relative_l2 ? "relative_l2" : "mse"; }

DatasetKind parse_dataset(const std::string& s) {
  if (s == "gradient_map") return DatasetKind::gradient_map;
  if (s == "inverse_helmholtz") return DatasetKind::inverse_helmholtz;
  throw ConfigError("unknown dataset '" + s + "' (expected gradient_map or inverse_helmholtz)");
}

LossKind parse_loss(const std::string& s) {
  if (s == "relative_l2") return LossKind::relative_l2;
  if (s == "mse") return LossKind::mse;
  throw ConfigError("unknown loss '" + s + "' (expected relative_l2 or mse)");
}

GridField spectral_gradient(const GridField& u) {
  const SpectralField c = spectral::dft(u);
  const int d = u.dim();
  const int n = u.n();
  SpectralField out(d, n, u.channels() * d);
  for (int ch = 0; ch < u.channels(); ++ch) {
    const auto in = c.channel(ch);
    for (int j = 0; j < d; ++j) {
      auto dst = out.channel(ch * d + j);
      for (std::size_t b = 0; b < c.modes(); ++b) {
        const int k = c.freq_of(b)[j];
        // The unpaired -N/2 mode samples a cosine whose derivative vanishes on the grid.
        dst[b] = (n % 2 == 0 && k == -n / 2) ? Complex(0.0, 0.0) : Complex(0.0, kTwoPi * k) * in[b];
      }
    }
  }
  return spectral::idft_on_grid(out, n);
}

GridField inverse_helmholtz(const GridField& u) {
  SpectralField c = spectral::dft(u);
  for (int ch = 0; ch < c.channels(); ++ch) {
    auto v = c.channel(ch);
    for (std::size_t b = 0; b < c.modes(); ++b) {
      const Freq k = c.freq_of(b);
      double k2 = 0.0;
      for (int j = 0; j < u.dim(); ++j) k2 += double(k[j]) * k[j];
      v[b] /= 1.0 + 4.0 * std::numbers::pi * std::numbers::pi * k2;
    }
  }
  return spectral::idft_on_grid(c, u.n());
}

GridField apply_operator(DatasetKind kind, const GridField& u) {
  return kind == DatasetKind::gradient_map ? spectral_gradient(u) : inverse_helmholtz(u);
}

int target_channels(DatasetKind kind, int dim) { return kind == DatasetKind::gradient_map ? dim : 1; }

Dataset make_dataset(DatasetKind kind, SplitSizes sizes, double s, int n_ref, std::uint64_t seed, int dim,
                     double tau) {
  if (sizes.train < 0 || sizes.validation < 0 || sizes.test < 0 || sizes.train + sizes.validation + sizes.test < 1) {
    throw PreconditionError("make_dataset: needs at least one sample");
  }
  Dataset data;
  data.kind = kind;
  data.n_ref = n_ref;
  data.s = s;
  data.seed = seed;
  std::uint64_t index = 0;
  auto fill = [&](std::vector<Sample>& split, int count) {
    for (int i = 0; i < count; ++i, ++index) {
      grf::GrfSpec g;
      g.s = s;
      g.dim = dim;
      g.n_ref = n_ref;
      g.tau = tau;
      g.seed = seed + 1 + index;
      GridField u = grf::sample_grf(g);
      GridField target = apply_operator(kind, u);
      split.push_back({std::move(u), std::move(target)});
    }
  };
  fill(data.train, sizes.train);
  fill(data.validation, sizes.validation);
  fill(data.test, sizes.test);
  return data;
}

std::vector<Sample> restrict_samples(const std::vector<Sample>& samples, int n) {
  std::vector<Sample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({restrict_to(s.input, n), restrict_to(s.target, n)});
  return out;
}

double loss_eval(const GridField& pred, const GridField& target, LossKind kind) {
  if (!pred.same_shape(target)) throw PreconditionError("loss_eval: prediction and target shapes differ");
  const double points = double(pred.points());
  double diff = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) diff += std::pow(pred.values()[i] - target.values()[i], 2);
  diff /= points;
  if (kind == LossKind::mse) return diff;
  const double ref = sum_squares(target.values()) / points;
  if (ref == 0.0) throw PreconditionError("loss_eval: relative_l2 needs a nonzero target");
  return std::sqrt(diff / ref);
}

double batch_loss(const FnoParams& params, const std::vector<Sample>& batch, LossKind kind) {
  if (batch.empty()) throw PreconditionError("batch_loss: empty batch");
  double total = 0.0;
  for (const auto& s : batch) total += loss_eval(fno::forward(params, s.input, false).output, s.target, kind);
  return total / double(batch.size());
}

long double reference_loss(const FnoParams& params, const std::vector<Sample>& batch, LossKind kind) {
  if (batch.empty()) throw PreconditionError("reference_loss: empty batch");
  Real total = 0;
  for (const auto& s : batch) total += loss_ext(sums_ext(output_ext(params, s), s.target), s.target.points(), kind);
  return total / Real(batch.size());
}

LossAndGrad forward_backward(const FnoParams& params, const std::vector<Sample>& batch, LossKind kind) {
  if (batch.empty()) throw PreconditionError("forward_backward: empty batch");
  const auto& cfg = params.config;
  LossAndGrad out{0.0, FnoParams::zeros(cfg)};
  FnoParams& grad = out.grad;
  const double inv_batch = 1.0 / double(batch.size());
  for (const auto& sample : batch) {
    const auto result = fno::forward(params, sample.input, true, true);
    const auto& trace = *result.trace;
    out.loss += loss_eval(result.output, sample.target, kind) * inv_batch;

    GridField g = loss_gradient(result.output, sample.target, kind);
    for (double& v : g.values()) v *= inv_batch;
    const GridField& v_last = trace.states.back();
    if (cfg.proj_activation) {
      scale_by_derivative(g, fno::pointwise_affine(v_last, params.proj_w, params.proj_b), fno::Activation::gelu);
    }
    accumulate_affine(grad.proj_w, grad.proj_b, g, v_last);
    GridField gv = transpose_apply(params.proj_w, g);

    for (int t = cfg.layers - 1; t >= 0; --t) {
      const auto& layer = params.layers[t];
      const GridField& v = trace.states[t];
      scale_by_derivative(gv, trace.pre_activations[t + 1], cfg.activation);
      accumulate_affine(grad.layers[t].w, grad.layers[t].b, gv, v);
      const auto pg = fno::spectral_conv_weight_grad(v, gv, params.modes);
      for (std::size_t j = 0; j < pg.size(); ++j) grad.layers[t].p[j] += pg[j];
      GridField back = transpose_apply(layer.w, gv);
      add_into(back, fno::spectral_conv_adjoint(gv, layer.p, params.modes, cfg.width));
      gv = std::move(back);
    }

    scale_by_derivative(gv, trace.pre_activations[0], cfg.lift_activation);
    accumulate_affine(grad.lift_w, grad.lift_b, gv, fno::append_encoding(sample.input, cfg.encoding));
  }
  return out;
}

GradCheckResult gradient_check(const FnoParams& params, const std::vector<Sample>& batch, LossKind kind,
                               GradCheckOptions options) {
  if (options.h <= 0.0 || options.coordinates < 1) throw PreconditionError("gradient_check: bad options");
  const std::vector<double> g = forward_backward(params, batch, kind).grad.pack();
  const std::size_t count = g.size();

  // Seeded partial Fisher-Yates over the packed coordinates.
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  const CounterRng rng = CounterRng(options.seed).split(0x67726164);
  const std::size_t picks = std::min<std::size_t>(count, std::size_t(options.coordinates));
  for (std::size_t i = 0; i < picks; ++i) {
    const std::size_t j = i + rng.bits(i) % (count - i);
    std::swap(order[i], order[j]);
  }
  order.resize(picks);
  std::sort(order.begin(), order.end());

  GradCheckResult result;
  for (double v : g) result.grad_scale = std::max(result.grad_scale, std::abs(v));
  const std::vector<double> x0 = params.pack();
  FnoParams up = params, down = params;
  for (std::size_t idx : order) {
    std::vector<double> x = x0;
    x[idx] = x0[idx] + options.h;
    up.unpack(x);
    x[idx] = x0[idx] - options.h;
    down.unpack(x);
    long double delta = 0.0L;
    for (const auto& s : batch) delta += loss_difference_ext(output_ext(up, s), output_ext(down, s), s.target, kind);
    delta /= (long double)batch.size();
    GradCheckEntry e;
    e.index = idx;
    e.adjoint = g[idx];
    e.finite_difference = double(delta / (2.0L * options.h));
    const double denom = std::max({std::abs(e.adjoint), std::abs(e.finite_difference), 1e-6 * result.grad_scale});
    e.rel_err = denom > 0.0 ? std::abs(e.adjoint - e.finite_difference) / denom : 0.0;
    result.max_rel_err = std::max(result.max_rel_err, e.rel_err);
    result.entries.push_back(e);
  }
  return result;
}

void adam_step(std::vector<double>& x, const std::vector<double>& g, AdamState& state, const AdamConfig& cfg) {
  if (g.size() != x.size()) throw PreconditionError("adam_step: gradient size mismatch");
  if (state.m.empty()) {
    state.m.assign(x.size(), 0.0);
    state.v.assign(x.size(), 0.0);
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(state.t));
  for (std::size_t i = 0; i < x.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    x[i] -= cfg.step * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + cfg.eps);
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(adam.step > 0.0) || !(adam.eps > 0.0)) throw ConfigError("train step and eps must be positive");
  if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0) || !(adam.beta2 > 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("train moment decays must lie in (0, 1)");
  }
  if (grid < 1) throw ConfigError("train.grid must be >= 1");
}

void SchedulerConfig::validate(int n_ref) const {
  if (ladder.empty()) throw ConfigError("scheduler.ladder is empty");
  if (patience < 1) throw ConfigError("scheduler.patience must be >= 1");
  if (!(delta >= 0.0)) throw ConfigError("scheduler.delta must be >= 0");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (i > 0 && ladder[i] <= ladder[i - 1]) throw ConfigError("scheduler.ladder must be strictly increasing");
    if (ladder[i] < 1 || n_ref % ladder[i] != 0) {
      throw PreconditionError("ladder grid " + std::to_string(ladder[i]) + " does not divide n_ref = " +
                              std::to_string(n_ref));
    }
  }
}

SchedulerState make_scheduler_state() {
  SchedulerState s;
  s.best = std::numeric_limits<double>::infinity();
  return s;
}

SchedulerAction scheduler_step(SchedulerState& state, double validation_error, const SchedulerConfig& cfg) {
  if (validation_error < state.best * (1.0 - cfg.delta)) {
    state.best = validation_error;
    state.since_best = 0;
    return SchedulerAction::hold;
  }
  ++state.since_best;
  if (state.since_best >= cfg.patience && state.index + 1 < cfg.ladder.size()) {
    ++state.index;
    state.since_best = 0;
    state.best = std::numeric_limits<double>::infinity();
    return SchedulerAction::double_grid;
  }
  return SchedulerAction::hold;
}

TrainResult train_loop(FnoParams params, const Dataset& data, const TrainConfig& cfg,
                       const std::optional<SchedulerConfig>& scheduler, bool record_wall_time) {
  cfg.validate();
  if (data.train.empty()) throw PreconditionError("train_loop: empty training split");
  SchedulerState sched = make_scheduler_state();
  int grid = cfg.grid;
  if (scheduler) {
    scheduler->validate(data.n_ref);
    grid = scheduler->ladder.front();
  } else if (data.n_ref % grid != 0) {
    throw PreconditionError("train grid " + std::to_string(grid) + " does not divide n_ref = " +
                            std::to_string(data.n_ref));
  }
  fno::check_modes(params.config.modes, grid);

  TrainResult result{std::move(params), {}};
  FnoParams& p = result.params;
  std::vector<Sample> train = restrict_samples(data.train, grid);
  std::vector<Sample> validation = restrict_samples(data.validation, grid);
  const CounterRng shuffle_rng = CounterRng(cfg.seed).split(0x73687566);
  std::vector<std::size_t> order(train.size());
  AdamState adam;
  double cost = 0.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const CounterRng epoch_rng = shuffle_rng.split(std::uint64_t(epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[epoch_rng.bits(i) % i]);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += std::size_t(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + std::size_t(cfg.batch_size));
      std::vector<Sample> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train[order[i]]);
      const LossAndGrad lg = forward_backward(p, batch, cfg.loss);
      std::vector<double> x = p.pack();
      adam_step(x, lg.grad.pack(), adam, cfg.adam);
      p.unpack(x);
      loss_sum += lg.loss * double(batch.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.grid = grid;
    rec.train_loss = loss_sum / double(train.size());
    rec.val_err = mean_relative_error(p, validation);
    rec.test_err = mean_relative_error(p, data.test);
    cost += std::pow(double(grid), double(p.config.dim));
    rec.cum_gridpoint_epochs = cost;
    if (record_wall_time) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    result.history.epochs.push_back(rec);

    if (scheduler && scheduler_step(sched, rec.val_err, *scheduler) == SchedulerAction::double_grid) {
      grid = scheduler->ladder[sched.index];
      train = restrict_samples(data.train, grid);
      validation = restrict_samples(data.validation, grid);
      result.history.switch_epochs.push_back(epoch);
    }
  }
  return result;
}

}  // namespace specfno::train
