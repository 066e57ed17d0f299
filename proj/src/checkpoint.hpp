// Copyright 2026 The simulmt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SIMULMT_CHECKPOINT_HPP
#define SIMULMT_CHECKPOINT_HPP

#include <string>

#include "model.hpp"

namespace simulmt {

// Checkpoint file: a text manifest (names, shapes, hyperparameters, epoch,
// validation loss) terminated by a "data" line, then every parameter as
// little-endian float32 concatenated in manifest order.
struct Checkpoint {
  ModelParams params;
  Mode mode = Mode::adaptive;
  int k = 1;
  double alpha = 0.0;
  int epoch = 0;
  double val_loss = 0.0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace simulmt

#endif  // SIMULMT_CHECKPOINT_HPP
