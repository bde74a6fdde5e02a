#pragma once

// Data-parallel inner loops used on the hot path. Each kernel has a scalar
// reference and an AVX2 variant; both use the same operation order (no FMA
// contraction, correctly rounded sqrt/div) and agree bitwise.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace mqe::kernels {

/// out = R(-yaw) * (p - origin), with c = cos(yaw), s = sin(yaw).
using EgoTransformFn = void (*)(const double* px, const double* py, std::size_t n,
                                double ox, double oy, double c, double s,
                                double* out_x, double* out_y);

/// Accumulates the dog-repulsion kernel for every sheep (one lane per sheep):
///   a_i += k * max(0, 1/d - 1/R) * (p_i - dog) / d   for d in (0, R)
/// Dogs are visited in order, so each lane sums in the same order as scalar.
using RepulsionFn = void (*)(const double* sx, const double* sy, std::size_t n_sheep,
                             const double* dx, const double* dy, std::size_t n_dogs,
                             double sense_radius, double gain, double* ax, double* ay);

/// mask[j] = 1 if circles (cx,cy,r) and (xs[j],ys[j],rs[j]) overlap with margin.
using CircleOverlapFn = void (*)(double cx, double cy, double r, const double* xs,
                                 const double* ys, const double* rs, std::size_t n,
                                 double margin, std::uint8_t* mask);

struct KernelTable {
  std::string_view name;
  EgoTransformFn ego_transform;
  RepulsionFn repulsion;
  CircleOverlapFn circle_overlap;
};

const KernelTable& scalar();
/// nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2();
/// Selected once at first use: AVX2 if available unless MQE_SIMD=scalar.
const KernelTable& active();

}  // namespace mqe::kernels
