#ifndef FSAN_FSAN_HPP
#define FSAN_FSAN_HPP

#include <fsan/admm.hpp>
#include <fsan/dims.hpp>
#include <fsan/localization.hpp>
#include <fsan/tensor.hpp>
#include <fsan/toeplitz.hpp>

#endif // FSAN_FSAN_HPP
