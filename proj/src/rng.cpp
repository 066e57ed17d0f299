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

#include "rng.hpp"

namespace simulmt {

namespace {
uint64_t g_dropout_seed = 0;
uint64_t g_dropout_counter = 0;
}  // namespace

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double counter_uniform(uint64_t seed, uint64_t stream, uint64_t index) {
  uint64_t h = mix64(seed ^ mix64(stream) ^ (mix64(index) << 1));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

void seed_dropout(uint64_t seed) {
  g_dropout_seed = seed;
  g_dropout_counter = 0;
}

uint64_t next_dropout_call() { return g_dropout_counter++; }

uint64_t dropout_seed() { return g_dropout_seed; }

}  // namespace simulmt
