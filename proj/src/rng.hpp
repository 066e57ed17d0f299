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

#ifndef SIMULMT_RNG_HPP
#define SIMULMT_RNG_HPP

#include <cstdint>

namespace simulmt {

// splitmix64 finalizer; the workhorse behind the counter-based streams.
uint64_t mix64(uint64_t x);

// Stateless uniform in [0,1) keyed by (seed, stream, index). Used for dropout
// masks so a run is reproducible from the global seed and the call order
// alone, independent of thread scheduling.
double counter_uniform(uint64_t seed, uint64_t stream, uint64_t index);

// Per-run dropout stream: seeding resets the call counter.
void seed_dropout(uint64_t seed);
uint64_t next_dropout_call();
uint64_t dropout_seed();

}  // namespace simulmt

#endif  // SIMULMT_RNG_HPP
