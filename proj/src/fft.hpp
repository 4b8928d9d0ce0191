// Copyright 2026 The usqz Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <span>

namespace usqz::detail {

// In-place iterative radix-2 FFT. The length must be a power of two.
// Kept in-tree so that simulated frames do not depend on an external FFT
// library's plan selection or SIMD paths.
void fft(std::span<std::complex<double>> data, bool inverse);

[[nodiscard]] std::size_t next_pow2(std::size_t n) noexcept;

}  // namespace usqz::detail
