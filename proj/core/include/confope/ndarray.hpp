#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

namespace confope {

/// Dense row-major array of doubles with a fixed rank.
///
/// The last axis is contiguous, so `row(i, j, ...)` hands out a span over a
/// probability row P(.|x,a) or a policy row pi(.|x) without copying.
template <std::size_t Rank>
class NdArray {
  static_assert(Rank >= 1);

 public:
  using Shape = std::array<std::size_t, Rank>;

  NdArray() { shape_.fill(0); }

  explicit NdArray(Shape shape, double fill = 0.0)
      : shape_(shape),
        data_(std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                              std::multiplies<>()),
              fill) {}

  const Shape& shape() const { return shape_; }
  std::size_t extent(std::size_t axis) const { return shape_[axis]; }
  std::size_t size() const { return data_.size(); }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  template <typename... Idx>
  double& operator()(Idx... idx) {
    static_assert(sizeof...(Idx) == Rank);
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  template <typename... Idx>
  double operator()(Idx... idx) const {
    static_assert(sizeof...(Idx) == Rank);
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  /// Contiguous slice along the last axis.
  template <typename... Idx>
  std::span<double> row(Idx... idx) {
    static_assert(sizeof...(Idx) == Rank - 1);
    std::array<std::size_t, Rank> full{static_cast<std::size_t>(idx)..., 0};
    return std::span<double>(data_).subspan(offset(full), shape_[Rank - 1]);
  }

  template <typename... Idx>
  std::span<const double> row(Idx... idx) const {
    static_assert(sizeof...(Idx) == Rank - 1);
    std::array<std::size_t, Rank> full{static_cast<std::size_t>(idx)..., 0};
    return std::span<const double>(data_).subspan(offset(full), shape_[Rank - 1]);
  }

  bool operator==(const NdArray&) const = default;

 private:
  std::size_t offset(const std::array<std::size_t, Rank>& idx) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < Rank; ++k) off = off * shape_[k] + idx[k];
    return off;
  }

  Shape shape_;
  std::vector<double> data_;
};

using Matrix = NdArray<2>;
using Tensor3 = NdArray<3>;
using Tensor4 = NdArray<4>;

}  // namespace confope
