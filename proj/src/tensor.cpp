#include "burncnn/tensor.hpp"

#include <cstring>
#include <sstream>

#include "burncnn/errors.hpp"

namespace burncnn {

namespace {

void check_dims(const Shape& shape) {
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (shape[i] == 0) {
            throw ContractViolation("tensor dimension " + std::to_string(i) + " is zero in shape " +
                                    shape_string(shape));
        }
    }
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape) : shape_(std::move(shape)) {
    check_dims(shape_);
    data_.assign(shape_size(shape_), T{0});
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(std::move(shape)) {
    check_dims(shape_);
    data_.assign(shape_size(shape_), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_dims(shape_);
    if (data_.size() != shape_size(shape_)) {
        throw ContractViolation("tensor of shape " + shape_string(shape_) + " needs " +
                                std::to_string(shape_size(shape_)) + " values, got " +
                                std::to_string(data_.size()));
    }
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw ContractViolation("axis " + std::to_string(axis) + " out of range for rank " +
                                std::to_string(shape_.size()));
    }
    return shape_[axis];
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const& {
    return BasicTensor(std::move(shape), data_);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) && {
    return BasicTensor(std::move(shape), std::move(data_));
}

template <typename T>
bool bit_equal(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return a.shape() == b.shape() &&
           (a.size() == 0 || std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(T)) == 0);
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template bool bit_equal(const BasicTensor<float>&, const BasicTensor<float>&);
template bool bit_equal(const BasicTensor<double>&, const BasicTensor<double>&);

}  // namespace burncnn
