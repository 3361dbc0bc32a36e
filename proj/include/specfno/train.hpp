#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specfno/fno.hpp"
#include "specfno/grid.hpp"

// Supervised training of the discretized FNO: synthetic operator datasets,
// losses, exact reverse-mode gradients, adaptive-moment steps and the
// plateau-driven grid-doubling scheduler.
namespace specfno::train {

enum class DatasetKind { gradient_map, inverse_helmholtz };
enum class LossKind { relative_l2, mse };

std::string to_string(DatasetKind k);
std::string to_string(LossKind k);
DatasetKind parse_dataset(const std::string& s);
LossKind parse_loss(const std::string& s);

struct Sample {
  GridField input;
  GridField target;
};

struct SplitSizes {
  int train = 0;
  int validation = 0;
  int test = 0;
};

struct Dataset {
  DatasetKind kind = DatasetKind::gradient_map;
  int n_ref = 0;
  double s = 2.0;
  std::uint64_t seed = 0;
  std::vector<Sample> train, validation, test;
};

/// Spectral gradient (d/dx_1, d/dx_2) of every channel, channel-major
/// (d * channels outputs). Nyquist modes carry no derivative.
GridField spectral_gradient(const GridField& u);
/// Solves (I - Laplace) w = u exactly on the grid.
GridField inverse_helmholtz(const GridField& u);
GridField apply_operator(DatasetKind kind, const GridField& u);

/// Output channel count of a dataset's targets for scalar inputs in d dims.
int target_channels(DatasetKind kind, int dim);

/// Inputs are GRF samples at n_ref; sample i over the concatenated
/// (train, validation, test) sequence uses GRF seed seed + 1 + i.
Dataset make_dataset(DatasetKind kind, SplitSizes sizes, double s, int n_ref, std::uint64_t seed, int dim = 2,
                     double tau = 3.0);

/// Restriction of every sample to the grid N.
std::vector<Sample> restrict_samples(const std::vector<Sample>& samples, int n);

double loss_eval(const GridField& pred, const GridField& target, LossKind kind);
double batch_loss(const fno::FnoParams& params, const std::vector<Sample>& batch, LossKind kind);

struct LossAndGrad {
  double loss = 0.0;
  fno::FnoParams grad;  ///< same layout as the parameters
};

/// Mean loss over the batch and its exact gradient for the discretized
/// network at the batch grid.
LossAndGrad forward_backward(const fno::FnoParams& params, const std::vector<Sample>& batch, LossKind kind);

/// Same batch loss evaluated in extended precision with direct Fourier sums
/// over the kernel modes (no FFT). The finite-difference oracle uses this
/// path: in double precision, central differences at h = 1e-5 carry a
/// rounding error near eps * loss / h, too coarse for small gradient entries.
long double reference_loss(const fno::FnoParams& params, const std::vector<Sample>& batch, LossKind kind);

struct GradCheckOptions {
  int coordinates = 200;
  double h = 1e-5;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::size_t index = 0;  ///< into FnoParams::pack()
  double adjoint = 0.0;
  double finite_difference = 0.0;
  double rel_err = 0.0;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  double grad_scale = 0.0;  ///< max |adjoint| over all coordinates
  std::vector<GradCheckEntry> entries;
};

/// Central differences of reference_loss on a seeded random subset of packed
/// coordinates; the loss difference is formed from the output difference so
/// two nearly equal losses are never subtracted.
/// rel_err = |g - g_fd| / max(|g|, |g_fd|, 1e-6 * grad_scale).
GradCheckResult gradient_check(const fno::FnoParams& params, const std::vector<Sample>& batch, LossKind kind,
                               GradCheckOptions options = {});

struct AdamConfig {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;
};

/// One step on packed parameters; state is lazily sized.
void adam_step(std::vector<double>& x, const std::vector<double>& g, AdamState& state, const AdamConfig& cfg);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 16;
  AdamConfig adam;
  LossKind loss = LossKind::relative_l2;
  int grid = 64;  ///< training grid when no scheduler is given
  std::uint64_t seed = 0;

  void validate() const;
};

struct SchedulerConfig {
  std::vector<int> ladder;
  int patience = 40;
  double delta = 0.0;

  void validate(int n_ref) const;
};

struct SchedulerState {
  std::size_t index = 0;
  double best = 0.0;  ///< initialised to +inf by make_scheduler_state
  int since_best = 0;
};

enum class SchedulerAction { hold, double_grid };

SchedulerState make_scheduler_state();
SchedulerAction scheduler_step(SchedulerState& state, double validation_error, const SchedulerConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  int grid = 0;
  double train_loss = 0.0;
  double val_err = 0.0;
  double test_err = 0.0;
  double wall_ms = 0.0;
  double cum_gridpoint_epochs = 0.0;
};

struct History {
  std::vector<EpochRecord> epochs;
  std::vector<int> switch_epochs;  ///< epochs after which the grid doubled
};

struct TrainResult {
  fno::FnoParams params;
  History history;
};

/// Wall times are recorded only when record_wall_time is set, so the
/// default history is a pure function of its inputs.
TrainResult train_loop(fno::FnoParams params, const Dataset& data, const TrainConfig& cfg,
                       const std::optional<SchedulerConfig>& scheduler = std::nullopt, bool record_wall_time = false);

}  // namespace specfno::train
