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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "cryb/features/mfcc.hpp"

namespace cryb::svm {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr char kSvmMagic[] = "CRYSVM01";
inline constexpr double kStdFloor = 1e-8;

/// Flattens MFCCs coefficient-major into rows of 40 * 101 values.
Matrix flatten(std::span<const features::MfccMatrix* const> inputs);

/// Per-dimension z-scoring with a floor on the standard deviation.
struct Standardizer {
  Vector mean;
  Vector stddev;

  /// Throws EmptySet for fewer than 2 rows.
  static Standardizer fit(const Matrix& x);
  Matrix transform(const Matrix& x) const;
};

/// exp(-gamma * |u - v|^2). Throws DimMismatch.
double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma);
/// Gram matrix of the rows of a against the rows of b.
Matrix rbf_gram(const Matrix& a, const Matrix& b, double gamma);

struct SmoOptions {
  double C = 1.0;
  double weight_pos = 1.0;  // C for y = +1 is C * weight_pos
  double weight_neg = 1.0;
  double gamma = 1.0;
  double tol = 1e-3;
  long max_iterations = 1'000'000;
};

/// Dual solution over all training rows.
struct SmoSolution {
  Vector alpha;
  double b = 0.0;
  bool converged = false;
  long iterations = 0;

  /// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
  static double dual_objective(const Vector& alpha, std::span<const int> y, const Matrix& gram);
};

/// SMO with maximal-violating-pair selection over a precomputed Gram matrix.
/// Stops once the pair's violation is at most tol. y holds -1/+1. Throws
/// SingleClass, ShapeMismatch, InvalidArgument.
SmoSolution smo_solve(const Matrix& gram, std::span<const int> y, const SmoOptions& opt);

class SvmModel {
 public:
  Standardizer scaler;
  Matrix support;     // standardized support vectors, one per row
  Vector dual_coef;   // alpha_i * y_i
  double b = 0.0;
  double gamma = 1.0;
  double C = 1.0;
  double weight_pos = 1.0;
  double weight_neg = 1.0;
  bool converged = false;

  /// Decision values for already standardized rows.
  Vector decision_standardized(const Matrix& z) const;
  /// Decision values for raw flattened rows.
  Vector decision(const Matrix& x) const;
  /// -1 / +1.
  std::vector<int> predict_sign(const Matrix& x) const;
  /// Class 1 (asphyxia) for a positive decision, else class 0.
  std::vector<int> predict(std::span<const features::MfccMatrix* const> inputs) const;

  void save(const std::filesystem::path& path) const;
  /// Throws CorruptCheckpoint.
  static SvmModel load(const std::filesystem::path& path);
};

/// Trains on raw flattened rows (standardizer fitted here) with labels in
/// {-1, +1}. Class weights scale C per class.
SvmModel svm_train(const Matrix& x, std::span<const int> y, const SmoOptions& opt);

/// Maps class labels {0, 1} to {-1, +1}.
std::vector<int> to_signed(std::span<const int> labels);

/// "Balanced" weights n / (2 n_class) for labels in {-1, +1}.
std::pair<double, double> balanced_weights(std::span<const int> y);

struct GridPoint {
  double C = 0.0;
  double gamma = 0.0;
  double val_uar = 0.0;
  bool converged = false;
};

struct GridResult {
  SvmModel best;
  GridPoint best_point;
  std::vector<GridPoint> points;  // in search order
};

/// Default grids: C in {0.1, 1, 10, 100}, gamma in {0.1, 1, 10} / d.
std::vector<double> default_c_grid();
std::vector<double> default_gamma_grid(int dims);

/// Exhaustive search by validation UAR over C (outer, ascending) and gamma
/// (inner, ascending); a later point must be strictly better to win, so ties
/// go to the smaller C, then the smaller gamma. Class labels are {0, 1};
/// class weights are balanced.
GridResult grid_search(const Matrix& x_train, std::span<const int> train_labels, const Matrix& x_val,
                       std::span<const int> val_labels, std::span<const double> c_grid,
                       std::span<const double> gamma_grid, double tol = 1e-3);

}  // namespace cryb::svm
