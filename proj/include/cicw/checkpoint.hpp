#pragma once

// Binary parameter checkpoints, all fields little-endian:
//
//   8 bytes   magic "CIWMLP01"
//   u32       head (0 = sigmoid_binary, 1 = softmax)
//   u32       number of layer sizes S
//   S x u64   layer sizes, input first
//   f64 ...   per layer: weights (out x in, row-major) then biases

#include <iosfwd>
#include <string>

#include "cicw/tinynn.hpp"

namespace cicw {

inline constexpr char kCheckpointMagic[8] = {'C', 'I', 'W', 'M', 'L', 'P', '0', '1'};

void write_checkpoint(std::ostream& out, const MLPParams& params);
MLPParams read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const MLPParams& params);
MLPParams load_checkpoint(const std::string& path);

}  // namespace cicw
