#include "mqe/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <string_view>

namespace mqe::kernels {
namespace {

void ego_transform_scalar(const double* px, const double* py, std::size_t n, double ox,
                          double oy, double c, double s, double* out_x, double* out_y) {
  for (std::size_t i = 0; i < n; ++i) {
    const double rx = px[i] - ox;
    const double ry = py[i] - oy;
    out_x[i] = c * rx + s * ry;
    out_y[i] = c * ry - s * rx;
  }
}

void repulsion_scalar(const double* sx, const double* sy, std::size_t n_sheep,
                      const double* dx, const double* dy, std::size_t n_dogs,
                      double sense_radius, double gain, double* ax, double* ay) {
  const double inv_r = 1.0 / sense_radius;
  for (std::size_t i = 0; i < n_sheep; ++i) {
    double acc_x = ax[i];
    double acc_y = ay[i];
    for (std::size_t j = 0; j < n_dogs; ++j) {
      const double ux = sx[i] - dx[j];
      const double uy = sy[i] - dy[j];
      const double d = std::sqrt(ux * ux + uy * uy);
      if (d > 0.0 && d < sense_radius) {
        const double w = gain * ((1.0 / d - inv_r) / d);
        acc_x = acc_x + w * ux;
        acc_y = acc_y + w * uy;
      }
    }
    ax[i] = acc_x;
    ay[i] = acc_y;
  }
}

void circle_overlap_scalar(double cx, double cy, double r, const double* xs,
                           const double* ys, const double* rs, std::size_t n, double margin,
                           std::uint8_t* mask) {
  for (std::size_t j = 0; j < n; ++j) {
    const double ux = xs[j] - cx;
    const double uy = ys[j] - cy;
    const double reach = r + rs[j] + margin;
    mask[j] = (ux * ux + uy * uy) < reach * reach ? 1 : 0;
  }
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{"scalar", ego_transform_scalar, repulsion_scalar,
                                 circle_overlap_scalar};
  return table;
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* env = std::getenv("MQE_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar();
    if (const KernelTable* t = avx2()) return *t;
    return scalar();
  }();
  return chosen;
}

}  // namespace mqe::kernels
