#include "specfno/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace specfno::fft {
namespace {

enum class Kind { c2c_fwd, c2c_bwd, r2c, c2r, c2c_strided_fwd, c2c_strided_bwd, r2c_rows, c2r_rows };

// (kind, dim, n, howmany, stride, dist)
using PlanKey = std::tuple<Kind, int, int, int, int, int>;

constexpr unsigned kFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(const PlanKey& key) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    fftw_plan plan = make(key);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  static fftw_plan make(const PlanKey& key) {
    const auto [kind, dim, n, howmany, stride, dist] = key;
    int dims[2] = {n, n};
    const std::size_t block = dim == 1 ? n : std::size_t(n) * n;
    const std::size_t half_block = dim == 1 ? half_length(n) : std::size_t(n) * half_length(n);
    fftw_plan plan = nullptr;
    switch (kind) {
      case Kind::c2c_fwd:
      case Kind::c2c_bwd: {
        auto* buf = fftw_alloc_complex(block * howmany);
        plan = fftw_plan_many_dft(dim, dims, howmany, buf, nullptr, 1, int(block), buf, nullptr, 1,
                                  int(block), kind == Kind::c2c_fwd ? FFTW_FORWARD : FFTW_BACKWARD,
                                  kFlags);
        fftw_free(buf);
        break;
      }
      case Kind::r2c: {
        auto* in = fftw_alloc_real(block * howmany);
        auto* out = fftw_alloc_complex(half_block * howmany);
        plan = fftw_plan_many_dft_r2c(dim, dims, howmany, in, nullptr, 1, int(block), out, nullptr, 1,
                                      int(half_block), kFlags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case Kind::c2r: {
        auto* in = fftw_alloc_complex(half_block * howmany);
        auto* out = fftw_alloc_real(block * howmany);
        plan = fftw_plan_many_dft_c2r(dim, dims, howmany, in, nullptr, 1, int(half_block), out, nullptr,
                                      1, int(block), kFlags | FFTW_DESTROY_INPUT);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case Kind::c2c_strided_fwd:
      case Kind::c2c_strided_bwd: {
        const std::size_t extent = std::size_t(n - 1) * stride + std::size_t(howmany - 1) * dist + 1;
        auto* buf = fftw_alloc_complex(extent);
        plan = fftw_plan_many_dft(1, dims, howmany, buf, nullptr, stride, dist, buf, nullptr, stride, dist,
                                  kind == Kind::c2c_strided_fwd ? FFTW_FORWARD : FFTW_BACKWARD, kFlags);
        fftw_free(buf);
        break;
      }
      case Kind::r2c_rows: {
        auto* in = fftw_alloc_real(std::size_t(n) * howmany);
        auto* out = fftw_alloc_complex(std::size_t(half_length(n)) * howmany);
        plan = fftw_plan_many_dft_r2c(1, dims, howmany, in, nullptr, 1, n, out, nullptr, 1, half_length(n),
                                      kFlags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case Kind::c2r_rows: {
        auto* in = fftw_alloc_complex(std::size_t(half_length(n)) * howmany);
        auto* out = fftw_alloc_real(std::size_t(n) * howmany);
        plan = fftw_plan_many_dft_c2r(1, dims, howmany, in, nullptr, 1, half_length(n), out, nullptr, 1, n,
                                      kFlags | FFTW_DESTROY_INPUT);
        fftw_free(in);
        fftw_free(out);
        break;
      }
    }
    return plan;
  }

  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

void c2c(int dim, int n, int howmany, Complex* data, Direction dir) {
  const Kind kind = dir == Direction::forward ? Kind::c2c_fwd : Kind::c2c_bwd;
  fftw_execute_dft(cache().get({kind, dim, n, howmany, 1, 0}), as_fftw(data), as_fftw(data));
}

void r2c(int dim, int n, int howmany, const double* in, Complex* out) {
  fftw_execute_dft_r2c(cache().get({Kind::r2c, dim, n, howmany, 1, 0}), const_cast<double*>(in), as_fftw(out));
}

void c2r(int dim, int n, int howmany, Complex* in, double* out) {
  fftw_execute_dft_c2r(cache().get({Kind::c2r, dim, n, howmany, 1, 0}), as_fftw(in), out);
}

void c2c_strided(int n, int howmany, int stride, int dist, Complex* data, Direction dir) {
  const Kind kind = dir == Direction::forward ? Kind::c2c_strided_fwd : Kind::c2c_strided_bwd;
  fftw_execute_dft(cache().get({kind, 1, n, howmany, stride, dist}), as_fftw(data), as_fftw(data));
}

void r2c_rows(int n, int rows, const double* in, Complex* out) {
  fftw_execute_dft_r2c(cache().get({Kind::r2c_rows, 1, n, rows, 1, 0}), const_cast<double*>(in), as_fftw(out));
}

void c2r_rows(int n, int rows, Complex* in, double* out) {
  fftw_execute_dft_c2r(cache().get({Kind::c2r_rows, 1, n, rows, 1, 0}), as_fftw(in), out);
}

}  // namespace specfno::fft
