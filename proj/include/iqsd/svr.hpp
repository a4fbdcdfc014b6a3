// Copyright 2026 The IQSD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Epsilon-insensitive support vector regression with an RBF kernel.
//
// The dual is solved over 2l variables (a_1..a_l, a*_1..a*_l) in the
// LIBSVM formulation
//
//   min  1/2 z' Q z + p' z   s.t.  y' z = 0,  0 <= z <= C,
//
// with y = (+1,...,+1, -1,...,-1), p = (eps - t, eps + t) and
// Q_st = y_s y_t K(x_s, x_t). Working pairs are the maximal violating pair;
// ties resolve to the lowest index. Shrinking is not used.

#ifndef IQSD_SVR_HPP_
#define IQSD_SVR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "iqsd/error.hpp"
#include "iqsd/rng.hpp"

namespace iqsd {

struct SvrHyper {
  double c = 128.0;
  double epsilon = 0.1;
  // RBF width g; a value <= 0 selects 1 / (feature dimension).
  double gamma = 0.0;
  double tolerance = 1e-3;
  std::int64_t max_iterations = 1000000;
};

struct FeatureScaler {
  std::vector<double> mins;
  std::vector<double> maxs;

  std::size_t dim() const { return mins.size(); }

  static FeatureScaler fit(const std::vector<std::vector<double>>& rows) {
    FeatureScaler s;
    if (rows.empty()) return s;
    const std::size_t d = rows.front().size();
    s.mins.assign(d, std::numeric_limits<double>::infinity());
    s.maxs.assign(d, -std::numeric_limits<double>::infinity());
    for (const auto& r : rows)
      for (std::size_t k = 0; k < d; ++k) {
        s.mins[k] = std::min(s.mins[k], r[k]);
        s.maxs[k] = std::max(s.maxs[k], r[k]);
      }
    return s;
  }

  // Maps each dimension linearly so that the training range becomes
  // [-1, 1]; constant dimensions map to 0. Values outside the training
  // range extrapolate linearly.
  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != dim())
      throw ShapeError("feature vector has " + std::to_string(x.size()) + " dimensions, model expects " +
                       std::to_string(dim()));
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double span = maxs[k] - mins[k];
      out[k] = span > 0.0 ? -1.0 + 2.0 * (x[k] - mins[k]) / span : 0.0;
    }
    return out;
  }
};

struct SvrModel {
  std::vector<std::vector<double>> support_vectors;  // scaled space
  std::vector<double> dual_coeffs;                   // a_i - a*_i
  double bias = 0.0;
  double kernel_width = 0.0;
  FeatureScaler scaler;
  SvrHyper hyper;
  bool converged = true;
  std::int64_t iterations = 0;
  double kkt_violation = 0.0;
  double dual_objective = 0.0;
  std::size_t training_rows = 0;
  std::string row_hash;
};

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double g) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return std::exp(-g * d2);
}

// FNV-1a over the IEEE-754 bytes of every entry, row by row.
inline std::string feature_row_hash(const std::vector<std::vector<double>>& rows) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(rows.size());
  for (const auto& r : rows) {
    mix(r.size());
    for (double v : r) {
      if (v == 0.0) v = 0.0;
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      mix(bits);
    }
  }
  static const char* kHex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = kHex[h & 0xf];
  return out;
}

namespace svr_detail {

struct DualSolution {
  std::vector<double> beta;  // a_i - a*_i per training row
  double bias = 0.0;
  bool converged = false;
  std::int64_t iterations = 0;
  double violation = 0.0;
  double objective = 0.0;
};

class Solver {
 public:
  Solver(const std::vector<std::vector<double>>& xs, std::span<const double> t, const SvrHyper& h, double g)
      : l_(xs.size()), c_(h.c), kernel_(l_ * l_) {
    for (std::size_t i = 0; i < l_; ++i)
      for (std::size_t j = i; j < l_; ++j) kernel_[i * l_ + j] = kernel_[j * l_ + i] = rbf_kernel(xs[i], xs[j], g);
    const std::size_t n = 2 * l_;
    y_.resize(n);
    p_.resize(n);
    for (std::size_t i = 0; i < l_; ++i) {
      y_[i] = 1;
      y_[i + l_] = -1;
      p_[i] = h.epsilon - t[i];
      p_[i + l_] = h.epsilon + t[i];
    }
    alpha_.assign(n, 0.0);
    grad_ = p_;
  }

  DualSolution solve(double tol, std::int64_t max_iter) {
    DualSolution out;
    std::int64_t iter = 0;
    double gap = 0.0;
    for (;;) {
      std::size_t i = 0, j = 0;
      gap = select(i, j);
      if (gap < tol) {
        out.converged = true;
        break;
      }
      if (iter >= max_iter) break;
      ++iter;
      update(i, j);
    }
    out.iterations = iter;
    out.violation = std::max(gap, 0.0);
    out.beta.resize(l_);
    for (std::size_t k = 0; k < l_; ++k) out.beta[k] = alpha_[k] - alpha_[k + l_];
    out.bias = -rho();
    double obj = 0.0;
    for (std::size_t s = 0; s < 2 * l_; ++s) obj += alpha_[s] * (grad_[s] + p_[s]);
    out.objective = 0.5 * obj;
    return out;
  }

  // Largest KKT violation m(a) - M(a) with the gradient recomputed from
  // scratch, independent of the incrementally maintained one.
  double fresh_violation() const {
    const std::size_t n = 2 * l_;
    std::vector<double> g = p_;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = 0; t < n; ++t)
        if (alpha_[t] != 0.0) g[s] += q(s, t) * alpha_[t];
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n; ++s) {
      const double v = -y_[s] * g[s];
      if (in_up(s)) up = std::max(up, v);
      if (in_low(s)) low = std::min(low, v);
    }
    return std::max(up - low, 0.0);
  }

 private:
  double q(std::size_t s, std::size_t t) const {
    return y_[s] * y_[t] * kernel_[(s % l_) * l_ + (t % l_)];
  }
  bool in_up(std::size_t s) const { return y_[s] > 0 ? alpha_[s] < c_ : alpha_[s] > 0.0; }
  bool in_low(std::size_t s) const { return y_[s] > 0 ? alpha_[s] > 0.0 : alpha_[s] < c_; }

  double select(std::size_t& i, std::size_t& j) const {
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < 2 * l_; ++s) {
      const double v = -y_[s] * grad_[s];
      if (in_up(s) && v > up) {
        up = v;
        i = s;
      }
      if (in_low(s) && v < low) {
        low = v;
        j = s;
      }
    }
    return up - low;
  }

  void update(std::size_t i, std::size_t j) {
    constexpr double kTau = 1e-12;
    const double old_i = alpha_[i], old_j = alpha_[j];
    const double qii = q(i, i), qjj = q(j, j), qij = q(i, j);
    double& ai = alpha_[i];
    double& aj = alpha_[j];
    if (y_[i] != y_[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > c_) {
          ai = c_;
          aj = c_ - diff;
        }
      } else if (aj > c_) {
        aj = c_;
        ai = c_ + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c_) {
        if (ai > c_) {
          ai = c_;
          aj = sum - c_;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > c_) {
        if (aj > c_) {
          aj = c_;
          ai = sum - c_;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    const double di = ai - old_i, dj = aj - old_j;
    for (std::size_t s = 0; s < 2 * l_; ++s) grad_[s] += q(s, i) * di + q(s, j) * dj;
  }

  double rho() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t free = 0;
    for (std::size_t s = 0; s < 2 * l_; ++s) {
      const double yg = y_[s] * grad_[s];
      if (alpha_[s] >= c_) {
        if (y_[s] < 0)
          ub = std::min(ub, yg);
        else
          lb = std::max(lb, yg);
      } else if (alpha_[s] <= 0.0) {
        if (y_[s] > 0)
          ub = std::min(ub, yg);
        else
          lb = std::max(lb, yg);
      } else {
        ++free;
        sum_free += yg;
      }
    }
    return free > 0 ? sum_free / static_cast<double>(free) : 0.5 * (ub + lb);
  }

  std::size_t l_;
  double c_;
  std::vector<double> kernel_;
  std::vector<int> y_;
  std::vector<double> p_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
};

}  // namespace svr_detail

inline void validate_training_set(const std::vector<std::vector<double>>& x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ShapeError("feature rows (" + std::to_string(x.size()) + ") and targets (" + std::to_string(y.size()) +
                     ") differ in count");
  if (x.empty()) throw InsufficientDataError("SVR training needs at least one row");
  const std::size_t d = x.front().size();
  if (d == 0) throw ShapeError("feature vectors must be non-empty");
  for (const auto& r : x) {
    if (r.size() != d) throw ShapeError("feature rows have inconsistent dimensions");
    for (double v : r)
      if (!std::isfinite(v)) throw DomainError("feature values must be finite");
  }
  for (double v : y)
    if (!std::isfinite(v)) throw DomainError("SVR targets must be finite");
}

inline void validate_hyper(const SvrHyper& h) {
  if (!(h.c > 0.0) || !std::isfinite(h.c)) throw DomainError("SVR C must be positive");
  if (!(h.epsilon >= 0.0) || !std::isfinite(h.epsilon)) throw DomainError("SVR epsilon must be nonnegative");
  if (!std::isfinite(h.gamma)) throw DomainError("SVR gamma must be finite");
  if (!(h.tolerance > 0.0)) throw DomainError("SVR tolerance must be positive");
  if (h.max_iterations < 0) throw DomainError("SVR iteration cap must be nonnegative");
}

// Trains an epsilon-SVR. A single row is accepted and yields a model whose
// bias equals the target. Hitting the iteration cap returns a model with
// converged == false and the residual violation recorded.
inline SvrModel svr_train(const std::vector<std::vector<double>>& x, std::span<const double> y,
                          const SvrHyper& hyper = {}) {
  validate_training_set(x, y);
  validate_hyper(hyper);
  SvrModel m;
  m.hyper = hyper;
  m.scaler = FeatureScaler::fit(x);
  m.kernel_width = hyper.gamma > 0.0 ? hyper.gamma : 1.0 / static_cast<double>(m.scaler.dim());
  m.hyper.gamma = m.kernel_width;
  m.training_rows = x.size();
  m.row_hash = feature_row_hash(x);
  std::vector<std::vector<double>> xs;
  xs.reserve(x.size());
  for (const auto& r : x) xs.push_back(m.scaler.apply(r));
  svr_detail::Solver solver(xs, y, hyper, m.kernel_width);
  const auto sol = solver.solve(hyper.tolerance, hyper.max_iterations);
  m.bias = sol.bias;
  m.converged = sol.converged;
  m.iterations = sol.iterations;
  m.kkt_violation = solver.fresh_violation();
  m.dual_objective = sol.objective;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (sol.beta[i] == 0.0) continue;
    m.support_vectors.push_back(xs[i]);
    m.dual_coeffs.push_back(sol.beta[i]);
  }
  return m;
}

inline double svr_predict_scaled(const SvrModel& m, std::span<const double> xs) {
  double f = 0.0;
  for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
    f += m.dual_coeffs[i] * rbf_kernel(m.support_vectors[i], xs, m.kernel_width);
  return f + m.bias;
}

inline double svr_predict(const SvrModel& m, std::span<const double> x) {
  const auto xs = m.scaler.apply(x);
  return svr_predict_scaled(m, xs);
}

// Mean squared error of k-fold cross-validation. Folds are contiguous
// blocks of a permutation drawn from `seed`.
inline double svr_cross_validate(const std::vector<std::vector<double>>& x, std::span<const double> y,
                                 const SvrHyper& hyper, int folds, std::uint64_t seed) {
  validate_training_set(x, y);
  if (folds < 2 || static_cast<std::size_t>(folds) > x.size())
    throw InsufficientDataError("cross-validation needs at least as many rows as folds");
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  double sse = 0.0;
  for (int f = 0; f < folds; ++f) {
    const std::size_t lo = order.size() * f / folds, hi = order.size() * (f + 1) / folds;
    std::vector<std::vector<double>> tx;
    std::vector<double> ty;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k >= lo && k < hi) continue;
      tx.push_back(x[order[k]]);
      ty.push_back(y[order[k]]);
    }
    const SvrModel m = svr_train(tx, ty, hyper);
    for (std::size_t k = lo; k < hi; ++k) {
      const double e = svr_predict(m, x[order[k]]) - y[order[k]];
      sse += e * e;
    }
  }
  return sse / static_cast<double>(x.size());
}

struct GridSearchResult {
  SvrHyper best;
  double best_mse = std::numeric_limits<double>::infinity();
};

// Grid over C in {2^-1, ..., 2^7} and g in {2^-7, ..., 2^1} with 5-fold
// cross-validation; the first grid point (C-major, ascending) with the
// smallest error wins.
inline GridSearchResult svr_grid_search(const std::vector<std::vector<double>>& x, std::span<const double> y,
                                        const SvrHyper& base, std::uint64_t seed, int folds = 5) {
  GridSearchResult out;
  out.best = base;
  for (int ce = -1; ce <= 7; ++ce)
    for (int ge = -7; ge <= 1; ++ge) {
      SvrHyper h = base;
      h.c = std::ldexp(1.0, ce);
      h.gamma = std::ldexp(1.0, ge);
      const double mse = svr_cross_validate(x, y, h, folds, seed);
      if (mse < out.best_mse) {
        out.best_mse = mse;
        out.best = h;
      }
    }
  return out;
}

inline nlohmann::json svr_to_json(const SvrModel& m) {
  nlohmann::json j;
  j["kernel"] = "rbf";
  j["kernel_width"] = m.kernel_width;
  j["bias"] = m.bias;
  j["hyper"] = {{"c", m.hyper.c},
                {"epsilon", m.hyper.epsilon},
                {"gamma", m.hyper.gamma},
                {"tolerance", m.hyper.tolerance},
                {"max_iterations", m.hyper.max_iterations}};
  j["scaler"] = {{"min", m.scaler.mins}, {"max", m.scaler.maxs}};
  j["support_vectors"] = m.support_vectors;
  j["dual_coeffs"] = m.dual_coeffs;
  j["converged"] = m.converged;
  j["iterations"] = m.iterations;
  j["kkt_violation"] = m.kkt_violation;
  j["dual_objective"] = m.dual_objective;
  j["training_rows"] = m.training_rows;
  j["row_hash"] = m.row_hash;
  return j;
}

inline SvrModel svr_from_json(const nlohmann::json& j) {
  SvrModel m;
  try {
    if (j.value("kernel", std::string("rbf")) != "rbf") throw DomainError("unsupported SVR kernel");
    m.kernel_width = j.at("kernel_width").get<double>();
    m.bias = j.at("bias").get<double>();
    const auto& h = j.at("hyper");
    m.hyper.c = h.at("c").get<double>();
    m.hyper.epsilon = h.at("epsilon").get<double>();
    m.hyper.gamma = h.at("gamma").get<double>();
    m.hyper.tolerance = h.value("tolerance", 1e-3);
    m.hyper.max_iterations = h.value("max_iterations", std::int64_t{1000000});
    m.scaler.mins = j.at("scaler").at("min").get<std::vector<double>>();
    m.scaler.maxs = j.at("scaler").at("max").get<std::vector<double>>();
    m.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    m.dual_coeffs = j.at("dual_coeffs").get<std::vector<double>>();
    m.converged = j.value("converged", true);
    m.iterations = j.value("iterations", std::int64_t{0});
    m.kkt_violation = j.value("kkt_violation", 0.0);
    m.dual_objective = j.value("dual_objective", 0.0);
    m.training_rows = j.value("training_rows", std::size_t{0});
    m.row_hash = j.value("row_hash", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed SVR model: ") + e.what(), 0, 0);
  }
  if (m.scaler.mins.size() != m.scaler.maxs.size()) throw ShapeError("SVR scaler min/max lengths differ");
  if (m.support_vectors.size() != m.dual_coeffs.size())
    throw ShapeError("SVR support vector and coefficient counts differ");
  for (const auto& sv : m.support_vectors)
    if (sv.size() != m.scaler.dim()) throw ShapeError("SVR support vector dimension mismatch");
  return m;
}

}  // namespace iqsd

#endif  // IQSD_SVR_HPP_
