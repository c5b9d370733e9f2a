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

#include "gensr/common.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <unordered_set>

namespace gensr {

std::vector<int64_t> Rng::sample_distinct(int64_t n, int64_t k,
                                          const std::vector<int64_t>& excluded) {
  std::unordered_set<int64_t> taken(excluded.begin(), excluded.end());
  if (n - static_cast<int64_t>(taken.size()) < k) {
    throw ConfigError("sample_distinct: not enough values outside the excluded set");
  }
  std::vector<int64_t> out;
  out.reserve(k);
  // Rejection sampling is fine at our scales (pool >> k in every caller).
  std::unordered_set<int64_t> chosen;
  while (static_cast<int64_t>(out.size()) < k) {
    int64_t v = static_cast<int64_t>(next_below(static_cast<uint64_t>(n)));
    if (taken.count(v) || chosen.count(v)) continue;
    chosen.insert(v);
    out.push_back(v);
  }
  return out;
}

uint64_t derive_seed(uint64_t base, const std::string& tag, uint64_t index) {
  uint64_t h = fnv1a_str(tag, 0xcbf29ce484222325ULL ^ base);
  h = fnv1a(&index, sizeof(index), h);
  return h;
}

uint64_t fnv1a(const void* data, size_t len, uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a_str(const std::string& s, uint64_t seed) {
  return fnv1a(s.data(), s.size(), seed);
}

std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::vector<std::string> tokenize_lower(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace gensr
