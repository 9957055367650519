#pragma once

#include <cstddef>

namespace trafficast::nn::detail {

// Vectorized elementwise nonlinearities (built with vector math library
// calls). Accurate to a few ulp rather than correctly rounded.
void sigmoid_inplace(double* z, std::size_t n);
void tanh_inplace(double* z, std::size_t n);
void tanh_copy(const double* z, double* out, std::size_t n);

}  // namespace trafficast::nn::detail
