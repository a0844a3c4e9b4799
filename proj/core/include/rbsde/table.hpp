#ifndef RBSDE_TABLE_HPP
#define RBSDE_TABLE_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace rbsde {

/// Dense row-major matrix of doubles, used for [path][step] arrays.
class Table {
public:
    Table() = default;
    Table(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Table&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Triangular node array: field[k] has k+1 entries.
using NodeField = std::vector<std::vector<double>>;

inline NodeField make_node_field(int n_steps, double fill = 0.0) {
    NodeField f(static_cast<std::size_t>(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k) f[k].assign(static_cast<std::size_t>(k) + 1, fill);
    return f;
}

}  // namespace rbsde

#endif  // RBSDE_TABLE_HPP
