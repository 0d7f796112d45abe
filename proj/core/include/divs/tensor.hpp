#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace divs {

struct TensorShape {
    int depth = 1;
    int height = 1;
    int width = 1;

    std::size_t elements() const {
        return static_cast<std::size_t>(depth) * height * width;
    }
    bool operator==(const TensorShape&) const = default;
    std::string to_string() const {
        return "(" + std::to_string(depth) + "," + std::to_string(height) + "," +
               std::to_string(width) + ")";
    }
};

// Dense 3-D tensor, row-major as (depth, height, width).
class Tensor3 {
public:
    Tensor3() = default;
    explicit Tensor3(TensorShape shape, double fill = 0.0)
        : shape_(shape), data_(shape.elements(), fill) {
        if (shape.depth < 1 || shape.height < 1 || shape.width < 1) {
            throw std::invalid_argument("Tensor3: all dimensions must be >= 1, got " +
                                        shape.to_string());
        }
    }
    Tensor3(TensorShape shape, std::vector<double> data)
        : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape.elements()) {
            throw std::invalid_argument("Tensor3: data size does not match shape " +
                                        shape.to_string());
        }
    }

    const TensorShape& shape() const { return shape_; }

    double& at(int d, int r, int c) {
        return data_[(static_cast<std::size_t>(d) * shape_.height + r) * shape_.width + c];
    }
    double at(int d, int r, int c) const {
        return data_[(static_cast<std::size_t>(d) * shape_.height + r) * shape_.width + c];
    }

    // Zero-padded read: out-of-range (r, c) yields 0.
    double at_padded(int d, int r, int c) const {
        if (r < 0 || c < 0 || r >= shape_.height || c >= shape_.width) return 0.0;
        return at(d, r, c);
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    std::vector<double> flatten() const { return data_; }

    bool operator==(const Tensor3&) const = default;

private:
    TensorShape shape_{};
    std::vector<double> data_;
};

}  // namespace divs
