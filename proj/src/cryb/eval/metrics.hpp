// Copyright 2026 The cryb Authors.
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

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

namespace cryb::eval {

/// Class 1 is the pathological (asphyxia) class and class 0 the normal one.
inline constexpr int kPositiveClass = 1;
inline constexpr int kNegativeClass = 0;

struct EvalReport {
  std::vector<std::vector<std::int64_t>> confusion;  // [truth][prediction]
  std::int64_t n = 0;
  double uar = 0.0;
  double sensitivity = 0.0;  // recall of class 1; NaN when absent
  double specificity = 0.0;  // recall of class 0; NaN when absent
  std::vector<double> recall;  // per class; NaN for classes with no examples

  int n_classes() const noexcept { return static_cast<int>(confusion.size()); }
  nlohmann::json to_json() const;
};

/// Confusion and recalls from parallel label vectors. UAR averages recall over
/// classes with at least one example. Throws EmptySet, BadClassIndex,
/// ShapeMismatch.
EvalReport make_report(std::span<const int> truth, std::span<const int> predicted, int n_classes);

}  // namespace cryb::eval
