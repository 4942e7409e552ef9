#include "vpme/poisson.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <utility>
#include <vector>

#include "vpme/lattice_green.hpp"
#include "vpme/log.hpp"

namespace vpme {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct FftwDeleter {
  void operator()(T* p) const noexcept { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double, FftwDeleter<double>>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwDeleter<fftw_complex>>;

}  // namespace

// The source occupies one octant of the padded box and only that octant of the result is
// read back, so the 3-d transform runs axis by axis and skips the all-zero rows and slabs.
// Rows and columns go one k-slab at a time; the k axis goes one j-row at a time through a
// small scratch block, with the kernel product applied there while the block is in cache.
struct FreeSpacePoisson::Plans {
  fftw_plan rows_forward = nullptr, columns_forward = nullptr, depth_forward = nullptr;
  fftw_plan rows_backward = nullptr, columns_backward = nullptr, depth_backward = nullptr;
  std::size_t real_size = 0;
  std::size_t line = 0;
  std::size_t slab_real_size = 0;
  std::size_t slab_complex_size = 0;
  std::size_t spectrum_size = 0;
  // Kernel transform stored j-row major: [j][k][i].
  ComplexBuffer kernel_hat;
  std::shared_ptr<const LatticeGreen> green;

  // Scratch buffers are recycled so repeated solves do not fault in fresh pages.
  struct Workspace {
    RealBuffer real;
    ComplexBuffer spectrum;
    ComplexBuffer depth;
  };
  std::mutex pool_mutex;
  std::vector<Workspace> pool;

  Workspace acquire() {
    {
      std::lock_guard lock(pool_mutex);
      if (!pool.empty()) {
        Workspace w = std::move(pool.back());
        pool.pop_back();
        return w;
      }
    }
    return {RealBuffer(fftw_alloc_real(slab_real_size)), ComplexBuffer(fftw_alloc_complex(spectrum_size)),
            ComplexBuffer(fftw_alloc_complex(slab_complex_size))};
  }

  void release(Workspace w) {
    std::lock_guard lock(pool_mutex);
    pool.push_back(std::move(w));
  }

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {rows_forward, columns_forward, depth_forward, rows_backward, columns_backward,
                        depth_backward})
      if (p) fftw_destroy_plan(p);
  }
};

FreeSpacePoisson::FreeSpacePoisson(const GridSpec& grid)
    : grid_(grid), padded_(2 * grid.cells()), plans_(std::make_unique<Plans>()) {
  const int n = grid.cells();
  const int P = padded_;
  const int half = P / 2 + 1;
  Plans& pl = *plans_;
  pl.real_size = static_cast<std::size_t>(P) * P * P;
  pl.line = static_cast<std::size_t>(half);
  pl.slab_real_size = static_cast<std::size_t>(n) * P;
  pl.slab_complex_size = static_cast<std::size_t>(P) * half;
  pl.spectrum_size = static_cast<std::size_t>(n) * pl.slab_complex_size;
  pl.green = lattice_green(n + 1);

  const std::size_t full = static_cast<std::size_t>(P) * pl.slab_complex_size;
  RealBuffer real(fftw_alloc_real(pl.real_size));
  ComplexBuffer natural(fftw_alloc_complex(full));
  pl.kernel_hat.reset(fftw_alloc_complex(full));
  fftw_plan kernel_plan = nullptr;
  {
    // FFTW_ESTIMATE keeps the chosen algorithm, and hence the rounding, run-independent.
    std::lock_guard lock(planner_mutex());
    kernel_plan = fftw_plan_dft_r2c_3d(P, P, P, real.get(), natural.get(), FFTW_ESTIMATE);

    fftw_complex* c = natural.get();
    const fftw_iodim row{P, 1, 1};
    const fftw_iodim r2c_rows{n, P, half};
    const fftw_iodim c2r_rows{n, half, P};
    const fftw_iodim column{P, half, half};
    const fftw_iodim lines{half, 1, 1};
    pl.rows_forward = fftw_plan_guru_dft_r2c(1, &row, 1, &r2c_rows, real.get(), c, FFTW_ESTIMATE);
    pl.columns_forward = fftw_plan_guru_dft(1, &column, 1, &lines, c, c, FFTW_FORWARD, FFTW_ESTIMATE);
    pl.depth_forward = fftw_plan_guru_dft(1, &column, 1, &lines, c, c, FFTW_FORWARD, FFTW_ESTIMATE);
    pl.depth_backward = fftw_plan_guru_dft(1, &column, 1, &lines, c, c, FFTW_BACKWARD, FFTW_ESTIMATE);
    pl.columns_backward = fftw_plan_guru_dft(1, &column, 1, &lines, c, c, FFTW_BACKWARD, FFTW_ESTIMATE);
    pl.rows_backward = fftw_plan_guru_dft_c2r(1, &row, 1, &c2r_rows, c, real.get(), FFTW_ESTIMATE);
  }
  const bool planned = kernel_plan && pl.rows_forward && pl.columns_forward && pl.depth_forward &&
                       pl.rows_backward && pl.columns_backward && pl.depth_backward;
  if (!planned) {
    std::lock_guard lock(planner_mutex());
    if (kernel_plan) fftw_destroy_plan(kernel_plan);
    throw Error(ErrorCode::InvalidParameter, "FFTW planning failed");
  }

  auto wrap = [P](int i) { return i <= P / 2 ? i : i - P; };
  double* kr = real.get();
  for (int k = 0; k < P; ++k)
    for (int j = 0; j < P; ++j)
      for (int i = 0; i < P; ++i)
        kr[(static_cast<std::size_t>(k) * P + j) * P + i] = kernel(wrap(i), wrap(j), wrap(k));
  fftw_execute(kernel_plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(kernel_plan);
  }
  const fftw_complex* src = natural.get();
  fftw_complex* dst = pl.kernel_hat.get();
  for (int k = 0; k < P; ++k)
    for (int j = 0; j < P; ++j)
      std::copy_n(&src[(static_cast<std::size_t>(k) * P + j) * half][0], 2 * half,
                  &dst[(static_cast<std::size_t>(j) * P + k) * half][0]);
}

FreeSpacePoisson::~FreeSpacePoisson() = default;

double FreeSpacePoisson::kernel(int di, int dj, int dk) const noexcept {
  return (*plans_->green)(di, dj, dk) / grid_.spacing();
}

ScalarField FreeSpacePoisson::convolve(const ScalarField& source) const {
  require_same_grid(grid_, source.grid());
  const int n = grid_.cells();
  const int P = padded_;
  const Plans& pl = *plans_;
  Plans::Workspace work = plans_->acquire();
  double* r = work.real.get();
  fftw_complex* s = work.spectrum.get();
  fftw_complex* d = work.depth.get();
  const std::size_t slab = pl.slab_complex_size;
  const std::size_t line = pl.line;

  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      double* row = r + static_cast<std::size_t>(j) * P;
      for (int i = 0; i < n; ++i) row[i] = source.at(i, j, k);
      std::fill(row + n, row + P, 0.0);
    }
    fftw_complex* sk = s + k * slab;
    fftw_execute_dft_r2c(pl.rows_forward, r, sk);
    std::fill(&sk[n * line][0], &sk[0][0] + 2 * slab, 0.0);
    fftw_execute_dft(pl.columns_forward, sk, sk);
  }

  const fftw_complex* kh = pl.kernel_hat.get();
  for (int j = 0; j < P; ++j) {
    for (int k = 0; k < n; ++k) std::copy_n(&s[(static_cast<std::size_t>(k) * P + j) * line][0], 2 * line, &d[k * line][0]);
    std::fill(&d[n * line][0], &d[0][0] + 2 * slab, 0.0);
    fftw_execute_dft(pl.depth_forward, d, d);
    const fftw_complex* kj = kh + static_cast<std::size_t>(j) * slab;
    for (std::size_t i = 0; i < slab; ++i) {
      const double a = d[i][0], b = d[i][1];
      const double c = kj[i][0], e = kj[i][1];
      d[i][0] = a * c - b * e;
      d[i][1] = a * e + b * c;
    }
    fftw_execute_dft(pl.depth_backward, d, d);
    for (int k = 0; k < n; ++k) std::copy_n(&d[k * line][0], 2 * line, &s[(static_cast<std::size_t>(k) * P + j) * line][0]);
  }

  const double scale = grid_.cell_volume() / static_cast<double>(pl.real_size);
  ScalarField out(grid_);
  for (int k = 0; k < n; ++k) {
    fftw_complex* sk = s + k * slab;
    fftw_execute_dft(pl.columns_backward, sk, sk);
    fftw_execute_dft_c2r(pl.rows_backward, sk, r);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) out.at(i, j, k) = r[static_cast<std::size_t>(j) * P + i] * scale;
  }
  plans_->release(std::move(work));
  return out;
}

std::shared_ptr<const FreeSpacePoisson> poisson_solver(const GridSpec& grid) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, std::shared_ptr<const FreeSpacePoisson>> cache;
  std::lock_guard lock(mutex);
  auto key = std::make_pair(grid.half_width(), grid.cells());
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (cache.size() >= 8) cache.clear();
  auto solver = std::make_shared<const FreeSpacePoisson>(grid);
  cache.emplace(key, solver);
  return solver;
}

double outer_shell_mass_fraction(const ScalarField& s) {
  const GridSpec& g = s.grid();
  const int n = g.cells();
  const double edge = 0.75 * g.half_width();
  double total = 0.0, outer = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double v = std::abs(s.at(i, j, k));
        total += v;
        const double r = std::max({std::abs(g.center(i)), std::abs(g.center(j)), std::abs(g.center(k))});
        if (r > edge) outer += v;
      }
  return total > 0.0 ? outer / total : 0.0;
}

namespace {
void check_source(const ScalarField& rho) {
  require_finite(rho, "density");
  const double frac = outer_shell_mass_fraction(rho);
  if (frac > kSupportGuardFraction) {
    std::ostringstream msg;
    msg << "source mass fraction " << frac
        << " lies in the outer 25% shell; free-space truncation may be inaccurate";
    warn_once("support-guard", msg.str());
  }
}
}  // namespace

ScalarField solve_free_space_poisson(const ScalarField& rho) {
  check_source(rho);
  return poisson_solver(rho.grid())->convolve(rho);
}

ScalarField solve_free_space_poisson_direct(const ScalarField& rho) {
  const GridSpec& g = rho.grid();
  require(g.cells() <= kDirectSummationMaxCells, ErrorCode::InvalidParameter,
          "direct summation is limited to n <= 32");
  check_source(rho);
  const int n = g.cells();
  auto green = lattice_green(n + 1);
  const int span = 2 * n - 1;
  std::vector<double> table(static_cast<std::size_t>(span) * span * span);
  for (int c = 0; c < span; ++c)
    for (int b = 0; b < span; ++b)
      for (int a = 0; a < span; ++a)
        table[(static_cast<std::size_t>(c) * span + b) * span + a] =
            (*green)(a - (n - 1), b - (n - 1), c - (n - 1));
  const double w = g.cell_volume() / g.spacing();
  ScalarField out(g);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int c = 0; c < n; ++c)
          for (int b = 0; b < n; ++b) {
            const double* row =
                &table[(static_cast<std::size_t>(k - c + n - 1) * span + (j - b + n - 1)) * span];
            for (int a = 0; a < n; ++a) acc += row[i - a + n - 1] * rho.at(a, b, c);
          }
        out.at(i, j, k) = acc * w;
      }
  return out;
}

}  // namespace vpme
