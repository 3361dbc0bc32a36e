#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specfno/grid.hpp"

// Discretized Fourier neural operator:
//   v_0 = sigma_p(A_p [a, enc(x)] + b_p)
//   v_{t+1} = sigma(W_t v_t + K_t^N v_t + b_t),   t = 0 .. T-1
//   u = A_q v_T + b_q
// with K_t^N v = sum_{k in modes} P_t(k) DFT(v)(k) e^{2 pi i <k, x>}.
namespace specfno::fno {

enum class Activation { gelu, relu, identity };
enum class Encoding { none, periodic, nonperiodic };

std::string to_string(Activation a);
std::string to_string(Encoding e);
Activation parse_activation(const std::string& s);  // "gelu" | "relu"
Encoding parse_encoding(const std::string& s);

struct FnoConfig {
  int dim = 2;
  int in_channels = 1;
  int out_channels = 1;
  int width = 16;
  int layers = 5;
  int modes = 12;  ///< truncation K; requires K < N/2 at evaluation
  Activation activation = Activation::gelu;
  /// Lift activation. Only the identity test hook may replace GeLU here.
  Activation lift_activation = Activation::gelu;
  /// Apply GeLU after the projection (off: the projection is affine).
  bool proj_activation = false;
  Encoding encoding = Encoding::periodic;

  void validate() const;
  int encoding_channels() const;
  /// Channel count entering the lift: in_channels + encoding channels.
  int lifted_channels() const { return in_channels + encoding_channels(); }
};

/// Kernel mode set: the Hermitian closure [[K]]^d U -[[K]]^d. Weights are
/// stored on its canonical half (k = 0 first, then modes whose first nonzero
/// component is positive); the other half is mirrored as P(-k) = conj P(k).
class ModeSet {
 public:
  struct Mode {
    Freq freq;
    int canonical;  ///< index into canonical()
    bool mirrored;  ///< P(freq) = conj(stored P)
  };

  ModeSet() = default;
  ModeSet(int dim, int k);

  int dim() const { return dim_; }
  int truncation() const { return k_; }
  /// Largest |k_i| over the set.
  int max_freq() const { return max_freq_; }
  const std::vector<Freq>& canonical() const { return canonical_; }
  const std::vector<Mode>& all() const { return all_; }

 private:
  int dim_ = 1;
  int k_ = 0;
  int max_freq_ = 0;
  std::vector<Freq> canonical_;
  std::vector<Mode> all_;
};

/// Row-major dense real matrix.
struct Dense {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Dense() = default;
  Dense(int r, int c, double fill = 0.0) : rows(r), cols(c), data(std::size_t(r) * c, fill) {}
  double& operator()(int r, int c) { return data[std::size_t(r) * cols + c]; }
  double operator()(int r, int c) const { return data[std::size_t(r) * cols + c]; }
};

struct LayerParams {
  Dense w;                   ///< width x width
  std::vector<double> b;     ///< width
  std::vector<Complex> p;    ///< [canonical mode][out][in]
};

struct FnoParams {
  FnoConfig config;
  ModeSet modes;
  Dense lift_w;  ///< width x lifted_channels
  std::vector<double> lift_b;
  std::vector<LayerParams> layers;
  Dense proj_w;  ///< out_channels x width
  std::vector<double> proj_b;

  /// All-zero parameters of the right shapes.
  static FnoParams zeros(const FnoConfig& config);

  /// Spectral weight P_t(k)[out][in] for any k in the full mode set.
  Complex spectral_weight(int layer, const ModeSet::Mode& mode, int out, int in) const;

  /// Flat view of every free real scalar: complex entries contribute re, im,
  /// except the k = 0 weights which are real by construction and contribute
  /// re only. Order: lift_w, lift_b, per layer (w, b, p), proj_w, proj_b.
  std::size_t scalar_count() const;
  std::vector<double> pack() const;
  void unpack(std::span<const double> flat);
};

enum class InitKind { standard, scaled, all_ones };

struct InitScheme {
  InitKind kind = InitKind::standard;
  double scale = 1.0;

  static InitScheme standard() { return {}; }
  static InitScheme scaled(double c) { return {InitKind::scaled, c}; }
  static InitScheme all_ones() { return {InitKind::all_ones, 1.0}; }
  std::string name() const;
};

/// standard: real weights and biases iid U(-1/sqrt(fan), 1/sqrt(fan)) with
/// fan = width (lift: lifted_channels); spectral re/im iid U(0, 1/width^2),
/// with the k = 0 weight kept real. scaled(c): standard times c.
/// all_ones: every real parameter 1, every spectral entry 1 + 0i.
FnoParams init_params(const FnoConfig& config, InitScheme scheme, std::uint64_t seed);

/// Norms used to audit the boundedness assumption on the parameters.
struct ParamNorms {
  std::vector<double> p_frobenius;  ///< ||P_t||_F over the full mode set
  std::vector<double> w_spectral;   ///< ||W_t||_2
  std::vector<double> b_norm;       ///< |b_t|
  double lift_nn = 0.0;             ///< (||A_p||_F^2 + |b_p|^2)^{1/2}
  double proj_nn = 0.0;
  /// max(1, all of the above): a valid M for this parameter set.
  double bound() const;
};
ParamNorms parameter_norms(const FnoParams& params);

/// Upper bound on ParamNorms::bound() for any standard draw.
double standard_init_bound(const FnoConfig& config);

/// Appends positional channels: periodic adds (sin 2 pi x_i, cos 2 pi x_i)
/// per axis, nonperiodic adds x_i per axis.
GridField append_encoding(const GridField& f, Encoding kind);

double activate(double x, Activation kind);
double activate_derivative(double x, Activation kind);
/// Pointwise activation or, with derivative = true, its derivative. GeLU is
/// the exact x * Phi(x); ReLU'(0) = 0.
GridField activation_apply(const GridField& f, Activation kind, bool derivative = false);

/// Throws ModeOverflowError unless K < N/2.
void check_modes(int truncation, int n);

/// Activation feeding state l (0 = lift).
Activation state_activation(const FnoConfig& config, int l);

/// K_t^N v for channel-major v with `in` channels; weights `p` laid out as
/// LayerParams::p with `out` output channels.
GridField spectral_conv(const GridField& v, std::span<const Complex> p, const ModeSet& modes, int out);

/// Adjoint of spectral_conv with respect to its input: given dL/dy, returns
/// dL/dv for the same weights.
GridField spectral_conv_adjoint(const GridField& grad_out, std::span<const Complex> p, const ModeSet& modes, int in);

/// Gradient of <grad_out, spectral_conv(v)> with respect to the canonical
/// weights, packed like LayerParams::p (d/dRe + i d/dIm). The k = 0 entry
/// stays real.
std::vector<Complex> spectral_conv_weight_grad(const GridField& v, const GridField& grad_out, const ModeSet& modes);

/// Same gradient on the full mode set before folding onto canonical storage:
/// entry [mode in ModeSet::all()][out][in] = G_out(k) conj(V_in(k)).
std::vector<Complex> spectral_conv_weight_grad_full(const GridField& v, const GridField& grad_out, const ModeSet& modes);

/// out = A v + b pointwise (A is rows x v.channels()).
GridField pointwise_affine(const GridField& v, const Dense& a, std::span<const double> b);

struct LayerTrace {
  std::vector<GridField> states;  ///< v_0 .. v_T
  /// Optional: pre_activations[l] is the argument of the activation that
  /// produces states[l] (l = 0 is the lift).
  std::vector<GridField> pre_activations;
};

struct ForwardResult {
  GridField output;
  std::optional<LayerTrace> trace;
};

ForwardResult forward(const FnoParams& params, const GridField& a, bool capture_trace,
                      bool capture_pre_activations = false);

}  // namespace specfno::fno
