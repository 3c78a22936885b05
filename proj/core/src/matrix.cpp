#include "ister/matrix.hpp"

#include <cmath>
#include <sstream>

#include "ister/error.hpp"

namespace ister {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values))
{
    if (data.size() != rows * cols) {
        std::ostringstream os;
        os << "matrix " << rows << "x" << cols << " needs " << rows * cols << " values, got " << data.size();
        throw DimensionError(os.str());
    }
}

std::vector<double> Matrix::column(std::size_t c) const
{
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

Matrix Matrix::row_slice(std::size_t start, std::size_t count) const
{
    if (start + count > rows) {
        std::ostringstream os;
        os << "row slice [" << start << ", " << start + count << ") out of range for " << shape_string();
        throw DimensionError(os.str());
    }
    Matrix out(count, cols);
    std::copy(data.begin() + static_cast<std::ptrdiff_t>(start * cols),
              data.begin() + static_cast<std::ptrdiff_t>((start + count) * cols), out.data.begin());
    return out;
}

Matrix Matrix::transposed() const
{
    Matrix out(cols, rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out(c, r) = (*this)(r, c);
        }
    }
    return out;
}

std::string Matrix::shape_string() const
{
    std::ostringstream os;
    os << "[" << rows << "x" << cols << "]";
    return os.str();
}

bool all_finite(std::span<const double> values)
{
    for (double v : values) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

} // namespace ister
