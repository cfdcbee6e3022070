#include "aatr/distance_transform.hpp"

#include <cmath>

namespace aatr {
namespace {

// One pass of the 1D lower envelope of parabolas w^2 (q - v)^2 + f(v).
void edt_1d(const double* f, double* d, std::size_t n, double w2, std::vector<std::size_t>& v,
            std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  std::size_t k = 0;
  bool any = false;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] == kNoFeature) continue;
    if (!any) {
      v[0] = q;
      z[0] = -kNoFeature;
      z[1] = kNoFeature;
      k = 0;
      any = true;
      continue;
    }
    const double fq = f[q] + w2 * static_cast<double>(q) * static_cast<double>(q);
    for (;;) {
      const std::size_t p = v[k];
      const double fp = f[p] + w2 * static_cast<double>(p) * static_cast<double>(p);
      const double s = (fq - fp) / (2.0 * w2 * (static_cast<double>(q) - static_cast<double>(p)));
      if (s <= z[k]) {
        if (k == 0) {
          v[0] = q;
          z[0] = -kNoFeature;
          z[1] = kNoFeature;
          break;
        }
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kNoFeature;
      break;
    }
  }
  if (!any) {
    for (std::size_t q = 0; q < n; ++q) d[q] = kNoFeature;
    return;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double dq = static_cast<double>(q) - static_cast<double>(v[k]);
    d[q] = w2 * dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> squared_edt(std::span<const std::uint8_t> feature, const Dims& dims,
                                const std::array<double, 3>& weights) {
  const std::size_t nx = dims.nx, ny = dims.ny, nz = dims.nz;
  if (feature.size() != dims.count()) fail(ErrorKind::Shape, "squared_edt: feature size mismatch");
  std::vector<double> grid(feature.size());
  for (std::size_t i = 0; i < feature.size(); ++i) grid[i] = feature[i] ? 0.0 : kNoFeature;

  const std::size_t longest = std::max({nx, ny, nz});
  std::vector<double> in(longest), out(longest);
  std::vector<std::size_t> v;
  std::vector<double> z;

  const std::array<std::size_t, 3> n{nx, ny, nz};
  const std::array<std::size_t, 3> stride{1, nx, nx * ny};
  for (int axis = 0; axis < 3; ++axis) {
    const double w2 = weights[axis] * weights[axis];
    const std::size_t len = n[axis];
    const std::size_t st = stride[axis];
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    for (std::size_t j = 0; j < n[a2]; ++j) {
      for (std::size_t i = 0; i < n[a1]; ++i) {
        const std::size_t base = i * stride[a1] + j * stride[a2];
        for (std::size_t q = 0; q < len; ++q) in[q] = grid[base + q * st];
        edt_1d(in.data(), out.data(), len, w2, v, z);
        for (std::size_t q = 0; q < len; ++q) grid[base + q * st] = out[q];
      }
    }
  }
  return grid;
}

}  // namespace aatr
