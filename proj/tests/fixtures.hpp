/*
 * Copyright 2026 The voxscreen Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Matrix fixtures and error-kind capture shared by tests.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "voxscreen/dataset.hpp"
#include "voxscreen/error.hpp"
#include "voxscreen/numeric.hpp"

namespace voxscreen::testing {

template <typename F>
std::optional<ErrorKind> KindOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline std::vector<std::string> Names(std::size_t p, const std::string& prefix = "f") {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < p; ++f) names.push_back(prefix + std::to_string(f));
  return names;
}

// Rows get ids r0, r1, ...; labels alternate unless given.
inline FeatureMatrix MakeMatrix(std::vector<std::vector<double>> rows, std::vector<int> labels = {}) {
  FeatureMatrix m;
  m.feature_names = Names(rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    RecordMeta meta;
    meta.id = "r" + std::to_string(r);
    const int label = labels.empty() ? static_cast<int>(r % 2) : labels[r];
    meta.label = label == 1 ? Label::kPd : Label::kNonPd;
    meta.gender = r % 3 == 0 ? Gender::kMale : Gender::kFemale;
    meta.age = 40.0 + static_cast<double>(r % 40);
    meta.environment = r % 7 == 0 ? Environment::kLab : Environment::kHome;
    meta.country = r % 2 == 0 ? "US" : "other";
    m.meta.push_back(meta);
  }
  m.rows = std::move(rows);
  return m;
}

inline FeatureMatrix RandomMatrix(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows(n, std::vector<double>(p));
  for (auto& row : rows) {
    for (auto& v : row) v = rng.Normal();
  }
  return MakeMatrix(std::move(rows));
}

}  // namespace voxscreen::testing
