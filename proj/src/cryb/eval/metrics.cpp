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

#include "cryb/eval/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cryb/common/error.hpp"

namespace cryb::eval {

EvalReport make_report(std::span<const int> truth, std::span<const int> predicted, int n_classes) {
  require(!truth.empty(), Errc::EmptySet, "no rows to evaluate");
  require(truth.size() == predicted.size(), Errc::ShapeMismatch, "truth and prediction lengths differ");
  require(n_classes >= 1, Errc::InvalidArgument, "n_classes must be positive");

  EvalReport r;
  const auto k = static_cast<std::size_t>(n_classes);
  r.confusion.assign(k, std::vector<std::int64_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    require(t >= 0 && t < n_classes && p >= 0 && p < n_classes, Errc::BadClassIndex,
            "label out of range: " + std::to_string(t) + " / " + std::to_string(p));
    ++r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  r.n = static_cast<std::int64_t>(truth.size());

  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.recall.assign(k, nan);
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::int64_t row = 0;
    for (auto v : r.confusion[c]) row += v;
    if (row == 0) continue;
    r.recall[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(row);
    sum += r.recall[c];
    ++present;
  }
  r.uar = sum / present;
  r.sensitivity = n_classes > kPositiveClass ? r.recall[kPositiveClass] : nan;
  r.specificity = r.recall[kNegativeClass];
  return r;
}

nlohmann::json EvalReport::to_json() const {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json recalls = nlohmann::json::array();
  for (double v : recall) recalls.push_back(num(v));
  return {{"n", n},
          {"uar", uar},
          {"sensitivity", num(sensitivity)},
          {"specificity", num(specificity)},
          {"recall", recalls},
          {"confusion", confusion}};
}

}  // namespace cryb::eval
