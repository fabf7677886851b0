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

#include "cryb/svm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cryb/common/container.hpp"
#include "cryb/common/error.hpp"
#include "cryb/eval/metrics.hpp"

namespace cryb::svm {
namespace {

constexpr double kTau = 1e-12;  // floor on the pair curvature

// Squared Euclidean distances between the rows of a and b.
Matrix squared_distances(const Matrix& a, const Matrix& b) {
  const Vector na = a.rowwise().squaredNorm();
  const Vector nb = b.rowwise().squaredNorm();
  Matrix d = -2.0 * (a * b.transpose());
  d.colwise() += na;
  d.rowwise() += nb.transpose();
  return d.cwiseMax(0.0);
}

Matrix exp_kernel(const Matrix& sq, double gamma) { return (-gamma * sq.array()).exp().matrix(); }

NamedTensor f64_tensor(std::string name, std::vector<int> shape, const double* data, std::size_t n) {
  NamedTensor t;
  t.name = std::move(name);
  t.shape = std::move(shape);
  t.is_f64 = true;
  t.f64.assign(data, data + n);
  return t;
}

}  // namespace

Matrix flatten(std::span<const features::MfccMatrix* const> inputs) {
  constexpr int d = features::kNumCoeffs * features::kNumFrames;
  Matrix x(static_cast<Eigen::Index>(inputs.size()), d);
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (int j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), j) = inputs[i]->coeffs[static_cast<std::size_t>(j)];
  return x;
}

Standardizer Standardizer::fit(const Matrix& x) {
  require(x.rows() >= 2, Errc::EmptySet, "standardization needs at least 2 rows");
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - s.mean.transpose();
  s.stddev = (centered.colwise().squaredNorm() / static_cast<double>(x.rows())).cwiseSqrt().transpose();
  s.stddev = s.stddev.cwiseMax(kStdFloor);
  return s;
}

Matrix Standardizer::transform(const Matrix& x) const {
  require(x.cols() == mean.size(), Errc::DimMismatch, "feature dimension differs from the fitted one");
  return ((x.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array()).matrix();
}

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
  require(u.size() == v.size(), Errc::DimMismatch, "kernel arguments differ in dimension");
  require(gamma > 0, Errc::InvalidArgument, "gamma must be positive");
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) d += (u[i] - v[i]) * (u[i] - v[i]);
  return std::exp(-gamma * d);
}

Matrix rbf_gram(const Matrix& a, const Matrix& b, double gamma) {
  require(a.cols() == b.cols(), Errc::DimMismatch, "kernel arguments differ in dimension");
  require(gamma > 0, Errc::InvalidArgument, "gamma must be positive");
  return exp_kernel(squared_distances(a, b), gamma);
}

double SmoSolution::dual_objective(const Vector& alpha, std::span<const int> y, const Matrix& gram) {
  Vector ya(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) ya(i) = alpha(i) * y[static_cast<std::size_t>(i)];
  return alpha.sum() - 0.5 * ya.dot(gram * ya);
}

SmoSolution smo_solve(const Matrix& gram, std::span<const int> y, const SmoOptions& opt) {
  const auto n = static_cast<Eigen::Index>(y.size());
  require(gram.rows() == n && gram.cols() == n, Errc::ShapeMismatch, "Gram matrix does not match labels");
  require(opt.C > 0 && opt.weight_pos > 0 && opt.weight_neg > 0 && opt.tol > 0, Errc::InvalidArgument,
          "C, class weights and tol must be positive");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    require(v == 1 || v == -1, Errc::InvalidArgument, "SVM labels must be -1 or +1");
    (v > 0 ? has_pos : has_neg) = true;
  }
  require(has_pos && has_neg, Errc::SingleClass, "both classes must be present");

  auto yi = [&](Eigen::Index i) { return static_cast<double>(y[static_cast<std::size_t>(i)]); };
  auto cap = [&](Eigen::Index i) { return opt.C * (yi(i) > 0 ? opt.weight_pos : opt.weight_neg); };
  auto q = [&](Eigen::Index i, Eigen::Index j) { return yi(i) * yi(j) * gram(i, j); };
  auto in_up = [&](const Vector& a, Eigen::Index t) { return yi(t) > 0 ? a(t) < cap(t) : a(t) > 0; };
  auto in_low = [&](const Vector& a, Eigen::Index t) { return yi(t) > 0 ? a(t) > 0 : a(t) < cap(t); };

  SmoSolution sol;
  Vector& a = sol.alpha;
  a = Vector::Zero(n);
  Vector grad = Vector::Constant(n, -1.0);  // gradient of 1/2 a'Qa - e'a

  for (;;) {
    Eigen::Index i = -1, j = -1;
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -yi(t) * grad(t);
      if (in_up(a, t) && v > g_max) g_max = v, i = t;
      if (in_low(a, t) && v < g_min) g_min = v, j = t;
    }
    if (i < 0 || j < 0 || g_max - g_min <= opt.tol) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= opt.max_iterations) break;
    ++sol.iterations;

    const double ci = cap(i), cj = cap(j);
    const double old_i = a(i), old_j = a(j);
    if (yi(i) != yi(j)) {
      double quad = gram(i, i) + gram(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = a(i) - a(j);
      a(i) += delta;
      a(j) += delta;
      if (diff > 0) {
        if (a(j) < 0) a(j) = 0, a(i) = diff;
      } else {
        if (a(i) < 0) a(i) = 0, a(j) = -diff;
      }
      if (diff > ci - cj) {
        if (a(i) > ci) a(i) = ci, a(j) = ci - diff;
      } else {
        if (a(j) > cj) a(j) = cj, a(i) = cj + diff;
      }
    } else {
      double quad = gram(i, i) + gram(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = a(i) + a(j);
      a(i) -= delta;
      a(j) += delta;
      if (sum > ci) {
        if (a(i) > ci) a(i) = ci, a(j) = sum - ci;
      } else {
        if (a(j) < 0) a(j) = 0, a(i) = sum;
      }
      if (sum > cj) {
        if (a(j) > cj) a(j) = cj, a(i) = sum - cj;
      } else {
        if (a(i) < 0) a(i) = 0, a(j) = sum;
      }
    }
    const double di = a(i) - old_i, dj = a(j) - old_j;
    for (Eigen::Index t = 0; t < n; ++t) grad(t) += q(t, i) * di + q(t, j) * dj;
  }

  // Offset: average over free vectors, else the middle of the feasible range.
  double sum = 0.0, upper = std::numeric_limits<double>::infinity(), lower = -upper;
  int free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yi(t) * grad(t);
    if (a(t) > 0 && a(t) < cap(t)) {
      sum += yg;
      ++free;
    } else if (yi(t) > 0 ? a(t) >= cap(t) : a(t) <= 0) {
      lower = std::max(lower, yg);
    } else {
      upper = std::min(upper, yg);
    }
  }
  const double rho = free > 0 ? sum / free : 0.5 * (upper + lower);
  sol.b = -rho;
  return sol;
}

Vector SvmModel::decision_standardized(const Matrix& z) const {
  if (support.rows() == 0) return Vector::Constant(z.rows(), b);
  return rbf_gram(z, support, gamma) * dual_coef + Vector::Constant(z.rows(), b);
}

Vector SvmModel::decision(const Matrix& x) const { return decision_standardized(scaler.transform(x)); }

std::vector<int> SvmModel::predict_sign(const Matrix& x) const {
  const Vector d = decision(x);
  std::vector<int> out(static_cast<std::size_t>(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) out[static_cast<std::size_t>(i)] = d(i) > 0 ? 1 : -1;
  return out;
}

std::vector<int> SvmModel::predict(std::span<const features::MfccMatrix* const> inputs) const {
  auto s = predict_sign(flatten(inputs));
  for (int& v : s) v = v > 0 ? 1 : 0;
  return s;
}

void SvmModel::save(const std::filesystem::path& path) const {
  ContainerFile f;
  const int d = static_cast<int>(scaler.mean.size());
  const int m = static_cast<int>(support.rows());
  f.header = {{"kind", "svm_rbf"},  {"gamma", gamma},           {"C", C},
              {"weight_pos", weight_pos}, {"weight_neg", weight_neg}, {"b", b},
              {"converged", converged}, {"n_features", d},          {"n_support", m}};
  f.tensors.push_back(f64_tensor("scaler.mean", {d}, scaler.mean.data(), static_cast<std::size_t>(d)));
  f.tensors.push_back(f64_tensor("scaler.std", {d}, scaler.stddev.data(), static_cast<std::size_t>(d)));
  if (m > 0) {
    f.tensors.push_back(f64_tensor("support", {m, d}, support.data(), static_cast<std::size_t>(m) * d));
    f.tensors.push_back(f64_tensor("dual_coef", {m}, dual_coef.data(), static_cast<std::size_t>(m)));
  }
  write_container(path, kSvmMagic, f);
}

SvmModel SvmModel::load(const std::filesystem::path& path) {
  const ContainerFile f = read_container(path, kSvmMagic);
  SvmModel s;
  try {
    require(f.header.at("kind") == "svm_rbf", Errc::CorruptCheckpoint, "not an RBF SVM model");
    s.gamma = f.header.at("gamma");
    s.C = f.header.at("C");
    s.weight_pos = f.header.at("weight_pos");
    s.weight_neg = f.header.at("weight_neg");
    s.b = f.header.at("b");
    s.converged = f.header.at("converged");
    const int d = f.header.at("n_features");
    const int m = f.header.at("n_support");
    auto get = [&](const char* name, std::size_t n) -> const std::vector<double>& {
      const NamedTensor* t = f.find(name);
      require(t && t->is_f64 && t->f64.size() == n, Errc::CorruptCheckpoint, std::string("bad tensor ") + name);
      return t->f64;
    };
    const auto& mean = get("scaler.mean", static_cast<std::size_t>(d));
    const auto& sd = get("scaler.std", static_cast<std::size_t>(d));
    s.scaler.mean = Eigen::Map<const Vector>(mean.data(), d);
    s.scaler.stddev = Eigen::Map<const Vector>(sd.data(), d);
    s.support.resize(m, d);
    s.dual_coef.resize(m);
    if (m > 0) {
      const auto& sv = get("support", static_cast<std::size_t>(m) * d);
      const auto& dc = get("dual_coef", static_cast<std::size_t>(m));
      s.support = Eigen::Map<const Matrix>(sv.data(), m, d);
      s.dual_coef = Eigen::Map<const Vector>(dc.data(), m);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::CorruptCheckpoint, std::string("SVM header: ") + e.what());
  }
  return s;
}

namespace {

SvmModel assemble(const Standardizer& scaler, const Matrix& z, std::span<const int> y, const SmoSolution& sol,
                  const SmoOptions& opt) {
  SvmModel m;
  m.scaler = scaler;
  m.gamma = opt.gamma;
  m.C = opt.C;
  m.weight_pos = opt.weight_pos;
  m.weight_neg = opt.weight_neg;
  m.b = sol.b;
  m.converged = sol.converged;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < sol.alpha.size(); ++i)
    if (sol.alpha(i) > 0) sv.push_back(i);
  m.support.resize(static_cast<Eigen::Index>(sv.size()), z.cols());
  m.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    m.support.row(r) = z.row(sv[k]);
    m.dual_coef(r) = sol.alpha(sv[k]) * y[static_cast<std::size_t>(sv[k])];
  }
  return m;
}

}  // namespace

SvmModel svm_train(const Matrix& x, std::span<const int> y, const SmoOptions& opt) {
  require(x.rows() == static_cast<Eigen::Index>(y.size()), Errc::ShapeMismatch, "rows and labels differ in count");
  const Standardizer scaler = Standardizer::fit(x);
  const Matrix z = scaler.transform(x);
  const SmoSolution sol = smo_solve(rbf_gram(z, z, opt.gamma), y, opt);
  return assemble(scaler, z, y, sol, opt);
}

std::vector<int> to_signed(std::span<const int> labels) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    require(l == 0 || l == 1, Errc::BadClassIndex, "the SVM baseline is binary");
    out.push_back(l == 1 ? 1 : -1);
  }
  return out;
}

std::pair<double, double> balanced_weights(std::span<const int> y) {
  double pos = 0, neg = 0;
  for (int v : y) (v > 0 ? pos : neg) += 1;
  require(pos > 0 && neg > 0, Errc::SingleClass, "both classes must be present");
  const double n = pos + neg;
  return {n / (2 * pos), n / (2 * neg)};
}

std::vector<double> default_c_grid() { return {0.1, 1.0, 10.0, 100.0}; }

std::vector<double> default_gamma_grid(int dims) {
  const double base = 1.0 / dims;
  return {0.1 * base, base, 10.0 * base};
}

GridResult grid_search(const Matrix& x_train, std::span<const int> train_labels, const Matrix& x_val,
                       std::span<const int> val_labels, std::span<const double> c_grid,
                       std::span<const double> gamma_grid, double tol) {
  require(!c_grid.empty() && !gamma_grid.empty(), Errc::InvalidArgument, "empty hyperparameter grid");
  const auto y = to_signed(train_labels);
  const auto [w_pos, w_neg] = balanced_weights(y);
  const Standardizer scaler = Standardizer::fit(x_train);
  const Matrix z = scaler.transform(x_train);
  const Matrix zv = scaler.transform(x_val);
  const Matrix sq_train = squared_distances(z, z);

  GridResult result;
  result.best_point.val_uar = -1.0;
  for (double c : c_grid) {
    for (double gamma : gamma_grid) {
      SmoOptions opt;
      opt.C = c;
      opt.gamma = gamma;
      opt.weight_pos = w_pos;
      opt.weight_neg = w_neg;
      opt.tol = tol;
      const SmoSolution sol = smo_solve(exp_kernel(sq_train, gamma), y, opt);
      SvmModel model = assemble(scaler, z, y, sol, opt);
      const Vector d = model.decision_standardized(zv);
      std::vector<int> pred(static_cast<std::size_t>(d.size()));
      for (Eigen::Index i = 0; i < d.size(); ++i) pred[static_cast<std::size_t>(i)] = d(i) > 0 ? 1 : 0;
      const GridPoint point{c, gamma, eval::make_report(val_labels, pred, 2).uar, sol.converged};
      result.points.push_back(point);
      if (point.val_uar > result.best_point.val_uar) {
        result.best_point = point;
        result.best = std::move(model);
      }
    }
  }
  return result;
}

}  // namespace cryb::svm
