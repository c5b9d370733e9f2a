// Copyright 2026 The GenSR Authors.
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

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gensr {

// Process exit codes shared by the CLI and library error paths.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kMissingPrerequisite = 3,
  kNumericalFailure = 4,
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PrerequisiteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic RNG with stdlib-independent distributions, so outputs are
// byte-stable across compilers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ULL) {
    // warm up splitmix so nearby seeds decorrelate
    next_u64();
    next_u64();
  }

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform integer in [0, n)
  uint64_t next_below(uint64_t n) {
    // rejection sampling, unbiased
    uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  double next_double() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = next_double();
    } while (u1 <= 1e-300);
    u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // k distinct values from [0, n) excluding `excluded` (sorted unique),
  // order of discovery preserved.
  std::vector<int64_t> sample_distinct(int64_t n, int64_t k,
                                       const std::vector<int64_t>& excluded);

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stable seed derivation: one base seed plus a tag (module) and an index
// (e.g. user id) yield an independent stream.
uint64_t derive_seed(uint64_t base, const std::string& tag, uint64_t index);

// FNV-1a over bytes; used for manifests and config hashes.
uint64_t fnv1a(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL);
uint64_t fnv1a_str(const std::string& s, uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(uint64_t v);

std::vector<std::string> tokenize_lower(const std::string& text);

}  // namespace gensr
