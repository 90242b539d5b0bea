#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace d2d {

/// Row-major 2-D array. Index order is (row, col) == (y, x).
template <typename T>
class Grid {
public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Grid(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    assert(data_.size() == rows_ * cols_);
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t y, std::size_t x) { return data_[y * cols_ + x]; }
  const T& operator()(std::size_t y, std::size_t x) const {
    return data_[y * cols_ + x];
  }

  std::span<T> row(std::size_t y) { return {data_.data() + y * cols_, cols_}; }
  std::span<const T> row(std::size_t y) const {
    return {data_.data() + y * cols_, cols_};
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool same_shape(const Grid& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

}  // namespace d2d
