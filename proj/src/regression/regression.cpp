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

#include "unitsurp/regression/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "unitsurp/error.hpp"
#include "unitsurp/io/tsv.hpp"
#include "unitsurp/parallel.hpp"
#include "unitsurp/rng.hpp"

namespace unitsurp {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

Measure parse_measure(std::string_view name) {
  if (name == "FF" || name == "first_fixation") return Measure::kFirstFixation;
  if (name == "GD" || name == "gaze_duration") return Measure::kGazeDuration;
  if (name == "TRT" || name == "total_reading_time") return Measure::kTotalReadingTime;
  fail(ErrorCode::kInvalidArgument, "unknown measure '" + std::string(name) + "'");
}

std::string_view measure_name(Measure m) {
  switch (m) {
    case Measure::kFirstFixation: return "FF";
    case Measure::kGazeDuration: return "GD";
    case Measure::kTotalReadingTime: return "TRT";
  }
  return "?";
}

double measure_value(const UnitMeasures& m, Measure which) {
  switch (which) {
    case Measure::kFirstFixation: return m.first_fixation;
    case Measure::kGazeDuration: return m.gaze_duration;
    case Measure::kTotalReadingTime: return m.total_reading_time;
  }
  return 0.0;
}

// ---- spline basis

CrSpline CrSpline::fit(const std::vector<double>& x, int k) {
  if (k < 3) fail(ErrorCode::kInvalidArgument, "spline basis needs k >= 3");
  std::vector<double> u(x);
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  if (u.empty() || !std::isfinite(u.front()) || !std::isfinite(u.back())) {
    fail(ErrorCode::kInvalidArgument, "spline data must be finite and nonempty");
  }
  CrSpline s;
  if (u.size() == 1) fail(ErrorCode::kDegenerateInput, "constant predictor");
  if (u.size() == 2) {
    s.linear_ = true;
    s.center_ = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    return s;
  }
  const std::size_t nk = std::min<std::size_t>(k, u.size());
  for (std::size_t i = 0; i < nk; ++i) {
    const double pos = static_cast<double>(i) * static_cast<double>(u.size() - 1) / static_cast<double>(nk - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, u.size() - 1);
    s.knots_.push_back(u[lo] + (pos - static_cast<double>(lo)) * (u[hi] - u[lo]));
  }
  const int m = static_cast<int>(nk);
  std::vector<double> h(m - 1);
  for (int i = 0; i + 1 < m; ++i) h[i] = s.knots_[i + 1] - s.knots_[i];
  MatrixXd d = MatrixXd::Zero(m - 2, m);
  MatrixXd b = MatrixXd::Zero(m - 2, m - 2);
  for (int i = 0; i + 2 < m; ++i) {
    d(i, i) = 1.0 / h[i];
    d(i, i + 1) = -1.0 / h[i] - 1.0 / h[i + 1];
    d(i, i + 2) = 1.0 / h[i + 1];
    b(i, i) = (h[i] + h[i + 1]) / 3.0;
    if (i + 3 < m) {
      b(i, i + 1) = h[i + 1] / 6.0;
      b(i + 1, i) = h[i + 1] / 6.0;
    }
  }
  const Eigen::LLT<MatrixXd> bl(b);
  const MatrixXd binv_d = bl.solve(d);
  s.f_ = MatrixXd::Zero(m, m);
  s.f_.middleRows(1, m - 2) = binv_d;
  s.s_ = d.transpose() * binv_d;
  s.s_ = 0.5 * (s.s_ + s.s_.transpose());

  const MatrixXd raw = s.raw_design(x);
  const VectorXd c = raw.colwise().sum().transpose();
  Eigen::HouseholderQR<MatrixXd> qr(c);
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(m, m);
  s.z_ = q.rightCols(m - 1);
  return s;
}

MatrixXd CrSpline::raw_design(const std::vector<double>& x) const {
  const auto n = static_cast<Eigen::Index>(x.size());
  if (linear_) {
    MatrixXd out(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) out(i, 0) = x[i] - center_;
    return out;
  }
  const int m = raw_size();
  MatrixXd out = MatrixXd::Zero(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double v = x[r];
    if (v < knots_.front() || v > knots_.back()) {
      // Linear beyond the ends, matching value and slope.
      const bool left = v < knots_.front();
      const int j = left ? 0 : m - 2;
      const double hj = knots_[j + 1] - knots_[j];
      const double at = left ? knots_.front() : knots_.back();
      VectorXd slope = VectorXd::Zero(m);
      slope(j) -= 1.0 / hj;
      slope(j + 1) += 1.0 / hj;
      if (left) {
        slope += -hj / 3.0 * f_.row(j).transpose() - hj / 6.0 * f_.row(j + 1).transpose();
      } else {
        slope += hj / 6.0 * f_.row(j).transpose() + hj / 3.0 * f_.row(j + 1).transpose();
      }
      out.row(r) = (v - at) * slope.transpose();
      out(r, left ? 0 : m - 1) += 1.0;
      continue;
    }
    auto it = std::upper_bound(knots_.begin(), knots_.end(), v);
    int j = static_cast<int>(it - knots_.begin()) - 1;
    j = std::clamp(j, 0, m - 2);
    const double hj = knots_[j + 1] - knots_[j];
    const double am = (knots_[j + 1] - v) / hj;
    const double ap = (v - knots_[j]) / hj;
    const double cm = (std::pow(knots_[j + 1] - v, 3) / hj - hj * (knots_[j + 1] - v)) / 6.0;
    const double cp = (std::pow(v - knots_[j], 3) / hj - hj * (v - knots_[j])) / 6.0;
    out.row(r) = cm * f_.row(j) + cp * f_.row(j + 1);
    out(r, j) += am;
    out(r, j + 1) += ap;
  }
  return out;
}

MatrixXd CrSpline::raw_penalty() const {
  if (linear_) return MatrixXd::Zero(1, 1);
  return s_;
}

MatrixXd CrSpline::design(const std::vector<double>& x) const {
  if (linear_) return raw_design(x);
  return raw_design(x) * z_;
}

MatrixXd CrSpline::penalty() const {
  if (linear_) return MatrixXd::Zero(1, 1);
  return z_.transpose() * s_ * z_;
}

// ---- specs and data

std::vector<std::string> ModelSpec::predictors() const {
  std::vector<std::string> out;
  for (const auto& s : smooths) out.push_back(s.predictor);
  for (const auto& s : participant_slopes) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

std::string ModelSpec::to_json() const {
  json j;
  j["role"] = role;
  j["smooths"] = json::array();
  for (const auto& s : smooths) j["smooths"].push_back({{"predictor", s.predictor}, {"k", s.k}});
  j["participant_intercepts"] = participant_intercepts;
  j["participant_slopes"] = participant_slopes;
  if (!fixed_lambda.empty()) j["fixed_lambda"] = fixed_lambda;
  if (fixed_ridge) j["fixed_ridge"] = *fixed_ridge;
  return j.dump(2);
}

ModelSpec ModelSpec::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ModelSpec s;
    s.role = j.value("role", "baseline");
    for (const auto& t : j.at("smooths")) {
      s.smooths.push_back({t.at("predictor").get<std::string>(), t.value("k", 6)});
    }
    s.participant_intercepts = j.value("participant_intercepts", true);
    if (j.contains("participant_slopes")) {
      s.participant_slopes = j.at("participant_slopes").get<std::vector<std::string>>();
    }
    if (j.contains("fixed_lambda")) s.fixed_lambda = j.at("fixed_lambda").get<std::map<std::string, double>>();
    if (j.contains("fixed_ridge")) s.fixed_ridge = j.at("fixed_ridge").get<double>();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParseError, std::string("model spec: ") + e.what());
  }
}

ModelSpec baseline_spec() {
  ModelSpec s;
  s.role = "baseline";
  for (const char* p : {"length", "unigram", "length_prev1", "unigram_prev1", "length_prev2", "unigram_prev2"}) {
    s.smooths.push_back({p, 6});
    s.participant_slopes.push_back(p);
  }
  return s;
}

ModelSpec target_spec() {
  ModelSpec s = baseline_spec();
  s.role = "target";
  for (const char* p : {"surprisal", "surprisal_prev1", "surprisal_prev2"}) {
    s.smooths.push_back({p, 6});
    s.participant_slopes.push_back(p);
  }
  return s;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset d;
  for (const auto& [name, col] : x) d.x[name].reserve(rows.size());
  for (std::size_t r : rows) {
    d.keys.push_back(keys[r]);
    d.participant.push_back(participant[r]);
    d.trial.push_back(trial[r]);
    d.log_y.push_back(log_y[r]);
    for (const auto& [name, col] : x) d.x[name].push_back(col[r]);
  }
  return d;
}

Dataset make_dataset(const ReadingTable& table, Measure measure) {
  Dataset d;
  const double na = std::numeric_limits<double>::quiet_NaN();
  auto put = [&](const char* name, const std::optional<double>& v) { d.x[name].push_back(v.value_or(na)); };
  for (const auto& r : table.rows) {
    const double y = measure_value(r.m, measure);
    if (!(y > 0) || !std::isfinite(y)) {
      fail(ErrorCode::kNonPositiveMeasure, "participant " + r.participant + " trial " + r.trial +
                                               " position " + std::to_string(r.position) + ": " +
                                               std::string(measure_name(measure)) + " is not positive");
    }
    d.keys.push_back(r.participant + "\t" + r.trial + "\t" + std::to_string(r.position));
    d.participant.push_back(r.participant);
    d.trial.push_back(r.trial);
    d.log_y.push_back(std::log(y));
    put("length", static_cast<double>(r.length));
    put("unigram", r.unigram);
    put("surprisal", r.surprisal);
    put("length_prev1", r.length_prev1);
    put("length_prev2", r.length_prev2);
    put("unigram_prev1", r.unigram_prev1);
    put("unigram_prev2", r.unigram_prev2);
    put("surprisal_prev1", r.surprisal_prev1);
    put("surprisal_prev2", r.surprisal_prev2);
  }
  return d;
}

// ---- fitting

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

const std::vector<double>& column(const Dataset& d, const std::string& name) {
  auto it = d.x.find(name);
  if (it == d.x.end()) fail(ErrorCode::kInvalidArgument, "no predictor '" + name + "'");
  return it->second;
}

std::vector<double> lambda_grid() {
  std::vector<double> g;
  for (int i = 0; i < 20; ++i) g.push_back(std::pow(10.0, -4.0 + 10.0 * i / 19.0));
  return g;
}

struct PenaltyBlock {
  int offset = 0;
  MatrixXd s;  // scaled
  bool penalized = false;
};

// Normal equations split into the fixed block and one ridge block per
// participant, so the participant part is solved by Schur complement.
struct System {
  MatrixXd a;
  VectorXd xty;
  double yty = 0.0;
  std::vector<MatrixXd> ztz, b;
  std::vector<VectorXd> zty;
  int pf = 0, r = 0;
  std::size_t n = 0;
};

struct RidgeCache {
  double rho = 0.0;
  std::vector<MatrixXd> dinv;
  MatrixXd g, h;
  VectorXd gy;
  double tr_dinv = 0.0;
};

RidgeCache ridge_cache(const System& sys, double rho) {
  RidgeCache c;
  c.rho = rho;
  c.g = MatrixXd::Zero(sys.pf, sys.pf);
  c.h = MatrixXd::Zero(sys.pf, sys.pf);
  c.gy = VectorXd::Zero(sys.pf);
  for (std::size_t i = 0; i < sys.ztz.size(); ++i) {
    MatrixXd d = sys.ztz[i];
    d.diagonal().array() += rho;
    MatrixXd dinv = Eigen::LLT<MatrixXd>(d).solve(MatrixXd::Identity(sys.r, sys.r));
    const MatrixXd bd = sys.b[i] * dinv;
    c.g += bd * sys.b[i].transpose();
    c.h += bd * bd.transpose();
    c.gy += bd * sys.zty[i];
    c.tr_dinv += dinv.trace();
    c.dinv.push_back(std::move(dinv));
  }
  return c;
}

struct Solution {
  bool ok = false;
  VectorXd beta;
  std::vector<VectorXd> b;
  MatrixXd cinv;
  double rss = 0.0, edf = 0.0, gcv = std::numeric_limits<double>::infinity();
};

Solution solve(const System& sys, const std::vector<PenaltyBlock>& pen, const std::vector<double>& lambda,
               const RidgeCache& rc) {
  Solution s;
  MatrixXd c = sys.a - rc.g;
  for (std::size_t j = 0; j < pen.size(); ++j) {
    if (!pen[j].penalized) continue;
    const auto k = pen[j].s.rows();
    c.block(pen[j].offset, pen[j].offset, k, k) += lambda[j] * pen[j].s;
  }
  const Eigen::LLT<MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) return s;
  s.beta = llt.solve(sys.xty - rc.gy);
  s.cinv = llt.solve(MatrixXd::Identity(sys.pf, sys.pf));
  if (!s.beta.allFinite() || !s.cinv.allFinite()) return s;
  double bxy = s.beta.dot(sys.xty), bpb = 0.0;
  for (std::size_t i = 0; i < sys.ztz.size(); ++i) {
    VectorXd bi = rc.dinv[i] * (sys.zty[i] - sys.b[i].transpose() * s.beta);
    bxy += bi.dot(sys.zty[i]);
    bpb += rc.rho * bi.squaredNorm();
    s.b.push_back(std::move(bi));
  }
  double tr = rc.rho * (rc.tr_dinv + (s.cinv.cwiseProduct(rc.h)).sum());
  for (std::size_t j = 0; j < pen.size(); ++j) {
    if (!pen[j].penalized) continue;
    const auto k = pen[j].s.rows();
    const auto bj = s.beta.segment(pen[j].offset, k);
    bpb += lambda[j] * bj.dot(pen[j].s * bj);
    tr += lambda[j] * (s.cinv.block(pen[j].offset, pen[j].offset, k, k).cwiseProduct(pen[j].s)).sum();
  }
  s.rss = std::max(0.0, sys.yty - bxy - bpb);
  s.edf = static_cast<double>(sys.pf) + static_cast<double>(sys.ztz.size() * sys.r) - tr;
  const double n = static_cast<double>(sys.n);
  if (n - s.edf > 1e-9) s.gcv = n * s.rss / ((n - s.edf) * (n - s.edf));
  s.ok = true;
  return s;
}

}  // namespace

std::vector<double> FittedModel::zscored(const Dataset& d, const std::string& predictor, double mean,
                                         double sd) const {
  const auto& col = column(d, predictor);
  std::vector<double> z(col.size());
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (std::isnan(col[i])) fail(ErrorCode::kInvalidArgument, "missing value of '" + predictor + "'");
    z[i] = (col[i] - mean) / sd;
  }
  return z;
}

FittedModel fit(const Dataset& data, const ModelSpec& spec) {
  const std::size_t n = data.size();
  if (n == 0) fail(ErrorCode::kInvalidArgument, "no rows to fit");
  for (double y : data.log_y) {
    if (!std::isfinite(y)) fail(ErrorCode::kNonPositiveMeasure, "log measure is not finite");
  }
  FittedModel m;
  m.spec_ = spec;
  m.n_ = n;
  m.intercepts_ = spec.participant_intercepts;

  // Fixed block: intercept, then each usable smooth.
  std::vector<MatrixXd> blocks;
  int pf = 1;
  for (const auto& t : spec.smooths) {
    const auto& col = column(data, t.predictor);
    TermSummary ts;
    ts.predictor = t.predictor;
    for (double v : col) {
      if (std::isnan(v)) fail(ErrorCode::kInvalidArgument, "missing value of '" + t.predictor + "'");
    }
    const auto [mean, sd] = mean_sd(col);
    if (!(sd > 0)) {
      ts.dropped = true;
      m.terms_.push_back(ts);
      continue;
    }
    FittedModel::Smooth s{t.predictor, mean, sd, {}, pf};
    const auto z = m.zscored(data, t.predictor, mean, sd);
    s.basis = CrSpline::fit(z, t.k);
    blocks.push_back(s.basis.design(z));
    pf += s.basis.size();
    m.smooths_.push_back(std::move(s));
    m.terms_.push_back(ts);
  }
  for (const auto& p : spec.participant_slopes) {
    const auto& col = column(data, p);
    for (double v : col) {
      if (std::isnan(v)) fail(ErrorCode::kInvalidArgument, "missing value of '" + p + "'");
    }
    const auto [mean, sd] = mean_sd(col);
    if (sd > 0) m.slopes_.push_back({p, mean, sd});
  }

  MatrixXd xf(n, pf);
  xf.col(0).setOnes();
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    xf.middleCols(m.smooths_[j].offset, blocks[j].cols()) = blocks[j];
  }
  const VectorXd y = Eigen::Map<const VectorXd>(data.log_y.data(), static_cast<Eigen::Index>(n));

  const int r = (m.intercepts_ ? 1 : 0) + static_cast<int>(m.slopes_.size());
  std::vector<std::vector<double>> slope_z;
  for (const auto& s : m.slopes_) slope_z.push_back(m.zscored(data, s.predictor, s.mean, s.sd));
  std::map<std::string, int> pid;
  if (r > 0) {
    for (const auto& p : data.participant) pid.emplace(p, 0);
    int k = 0;
    for (auto& [name, idx] : pid) idx = k++;
  }

  System sys;
  sys.pf = pf;
  sys.r = r;
  sys.n = n;
  sys.a = xf.transpose() * xf;
  sys.xty = xf.transpose() * y;
  sys.yty = y.squaredNorm();
  sys.ztz.assign(pid.size(), MatrixXd::Zero(r, r));
  sys.b.assign(pid.size(), MatrixXd::Zero(pf, r));
  sys.zty.assign(pid.size(), VectorXd::Zero(r));
  std::vector<int> row_pid(n, -1);
  VectorXd zr(r);
  auto z_row = [&](std::size_t i) {
    int c = 0;
    if (m.intercepts_) zr(c++) = 1.0;
    for (const auto& z : slope_z) zr(c++) = z[i];
  };
  if (r > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      const int p = pid.at(data.participant[i]);
      row_pid[i] = p;
      z_row(i);
      sys.ztz[p] += zr * zr.transpose();
      sys.b[p] += xf.row(static_cast<Eigen::Index>(i)).transpose() * zr.transpose();
      sys.zty[p] += y(static_cast<Eigen::Index>(i)) * zr;
    }
  }

  // Penalties scaled to their block of X'X so one grid fits every term.
  std::vector<PenaltyBlock> pen;
  for (const auto& s : m.smooths_) {
    PenaltyBlock pb;
    pb.offset = s.offset;
    pb.s = s.basis.penalty();
    const double sn = pb.s.norm();
    if (sn > 0) {
      const auto k = pb.s.rows();
      pb.s *= sys.a.block(s.offset, s.offset, k, k).norm() / sn;
      pb.penalized = true;
    }
    pen.push_back(std::move(pb));
  }
  double ridge_scale = 1.0;
  if (r > 0) {
    double tr = 0.0;
    for (const auto& z : sys.ztz) tr += z.trace();
    ridge_scale = tr / static_cast<double>(pid.size() * r);
    if (!(ridge_scale > 0)) ridge_scale = 1.0;
  }

  const auto grid = lambda_grid();
  const std::size_t mid = grid.size() / 2;
  std::vector<std::size_t> li(pen.size(), mid);
  std::size_t ri = mid;
  std::vector<double> lambda(pen.size(), 0.0);
  std::vector<bool> fixed(pen.size(), false);
  for (std::size_t j = 0; j < pen.size(); ++j) {
    auto it = spec.fixed_lambda.find(m.smooths_[j].predictor);
    if (it != spec.fixed_lambda.end()) {
      lambda[j] = it->second;
      fixed[j] = true;
    }
  }
  auto lambdas = [&] {
    std::vector<double> out(pen.size());
    for (std::size_t j = 0; j < pen.size(); ++j) out[j] = fixed[j] ? lambda[j] : grid[li[j]];
    return out;
  };
  const bool ridge_fixed = spec.fixed_ridge.has_value();
  auto rho_of = [&](std::size_t i) { return (ridge_fixed ? *spec.fixed_ridge : grid[i]) * ridge_scale; };

  RidgeCache rc = ridge_cache(sys, r > 0 ? rho_of(ri) : 0.0);
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (std::size_t j = 0; j < pen.size(); ++j) {
      if (fixed[j] || !pen[j].penalized) continue;
      std::size_t best = li[j];
      double best_gcv = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < grid.size(); ++g) {
        li[j] = g;
        const Solution s = solve(sys, pen, lambdas(), rc);
        if (s.ok && s.gcv < best_gcv) {
          best_gcv = s.gcv;
          best = g;
        }
      }
      li[j] = best;
    }
    if (r > 0 && !ridge_fixed) {
      std::size_t best = ri;
      double best_gcv = std::numeric_limits<double>::infinity();
      RidgeCache best_rc;
      for (std::size_t g = 0; g < grid.size(); ++g) {
        RidgeCache c = ridge_cache(sys, rho_of(g));
        const Solution s = solve(sys, pen, lambdas(), c);
        if (s.ok && s.gcv < best_gcv) {
          best_gcv = s.gcv;
          best = g;
          best_rc = std::move(c);
        }
      }
      if (std::isfinite(best_gcv)) {
        ri = best;
        rc = std::move(best_rc);
      }
    }
  }

  const auto lam = lambdas();
  const Solution sol = solve(sys, pen, lam, rc);
  if (!sol.ok) fail(ErrorCode::kSingularDesign, "penalized normal equations are not positive definite");
  const double dof = static_cast<double>(n) - sol.edf;
  if (!(dof > 1e-9)) fail(ErrorCode::kSingularDesign, "no residual degrees of freedom left");

  m.fixed_ = sol.beta;
  for (const auto& [name, idx] : pid) m.participants_[name] = sol.b[idx];
  VectorXd mu = xf * sol.beta;
  if (r > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      z_row(i);
      mu(static_cast<Eigen::Index>(i)) += zr.dot(sol.b[row_pid[i]]);
    }
  }
  m.rss_ = (y - mu).squaredNorm();
  m.edf_ = sol.edf;
  m.gcv_ = static_cast<double>(n) * m.rss_ / (dof * dof);
  m.sigma2_ = std::max(m.rss_ / dof, std::numeric_limits<double>::min());
  m.ridge_ = r > 0 ? rc.rho : 0.0;

  std::size_t j = 0;
  for (auto& ts : m.terms_) {
    if (ts.dropped) continue;
    const auto k = static_cast<Eigen::Index>(m.smooths_[j].basis.size());
    const auto off = m.smooths_[j].offset;
    const MatrixXd cj = sol.cinv.block(off, off, k, k);
    ts.lambda = pen[j].penalized ? lam[j] : 0.0;
    ts.edf = static_cast<double>(k) - (pen[j].penalized ? lam[j] * cj.cwiseProduct(pen[j].s).sum() : 0.0);
    const VectorXd bj = sol.beta.segment(off, k);
    const double q = bj.dot(Eigen::LDLT<MatrixXd>(m.sigma2_ * cj).solve(bj));
    ts.wald = ts.edf > 0 ? q / ts.edf : 0.0;
    ++j;
  }
  m.train_keys_ = data.keys;
  std::sort(m.train_keys_.begin(), m.train_keys_.end());
  return m;
}

bool FittedModel::trained_on(const std::string& key) const {
  return std::binary_search(train_keys_.begin(), train_keys_.end(), key);
}

std::vector<double> FittedModel::predict(const Dataset& d) const {
  const std::size_t n = d.size();
  VectorXd mu = VectorXd::Constant(static_cast<Eigen::Index>(n), fixed_(0));
  for (const auto& s : smooths_) {
    const MatrixXd x = s.basis.design(zscored(d, s.predictor, s.mean, s.sd));
    mu += x * fixed_.segment(s.offset, x.cols());
  }
  if (!participants_.empty()) {
    std::vector<std::vector<double>> sz;
    for (const auto& s : slopes_) sz.push_back(zscored(d, s.predictor, s.mean, s.sd));
    for (std::size_t i = 0; i < n; ++i) {
      auto it = participants_.find(d.participant[i]);
      if (it == participants_.end()) continue;  // unseen reader: population curve
      const VectorXd& b = it->second;
      int c = 0;
      double v = 0.0;
      if (intercepts_) v += b(c++);
      for (const auto& z : sz) v += b(c++) * z[i];
      mu(static_cast<Eigen::Index>(i)) += v;
    }
  }
  return {mu.data(), mu.data() + mu.size()};
}

std::vector<double> FittedModel::smooth(const std::string& predictor, const std::vector<double>& x) const {
  for (const auto& s : smooths_) {
    if (s.predictor != predictor) continue;
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - s.mean) / s.sd;
    const MatrixXd d = s.basis.design(z);
    const VectorXd v = d * fixed_.segment(s.offset, d.cols());
    return {v.data(), v.data() + v.size()};
  }
  return std::vector<double>(x.size(), 0.0);
}

// ---- evaluation

double lognormal_logpdf(double log_r, double mu, double sigma2) {
  const double e = log_r - mu;
  return -log_r - 0.5 * std::log(2.0 * M_PI * sigma2) - e * e / (2.0 * sigma2);
}

DeltaLlh delta_llh(const FittedModel& target, const FittedModel& baseline, const Dataset& heldout) {
  if (heldout.size() == 0) fail(ErrorCode::kEmptyHeldout, "no held-out rows");
  for (const auto& k : heldout.keys) {
    if (target.trained_on(k) || baseline.trained_on(k)) {
      fail(ErrorCode::kInvalidArgument, "held-out row used in training: " + k);
    }
  }
  const auto mt = target.predict(heldout);
  const auto mb = baseline.predict(heldout);
  DeltaLlh out;
  for (std::size_t i = 0; i < heldout.size(); ++i) {
    const double lt = lognormal_logpdf(heldout.log_y[i], mt[i], target.sigma2());
    const double lb = lognormal_logpdf(heldout.log_y[i], mb[i], baseline.sigma2());
    out.ll_target += lt;
    out.ll_baseline += lb;
    out.diffs.push_back(lt - lb);
  }
  const double n = static_cast<double>(heldout.size());
  out.ll_target /= n;
  out.ll_baseline /= n;
  out.delta = std::accumulate(out.diffs.begin(), out.diffs.end(), 0.0) / n;
  return out;
}

std::vector<double> LooResult::per_trial() const {
  std::vector<double> v;
  for (const auto& f : folds) v.push_back(f.d.delta);
  return v;
}

LooResult loo_cv(const Dataset& data, const ModelSpec& baseline, const ModelSpec& target, unsigned jobs) {
  std::vector<std::string> trials;
  std::map<std::string, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [it, fresh] = rows_of.try_emplace(data.trial[i]);
    if (fresh) trials.push_back(data.trial[i]);
    it->second.push_back(i);
  }
  if (trials.size() < 2) fail(ErrorCode::kInvalidArgument, "leave-one-trial-out needs at least 2 trials");
  LooResult out;
  out.folds.resize(trials.size());
  parallel_for(trials.size(), jobs, [&](std::size_t f) {
    const std::string& t = trials[f];
    try {
      std::vector<std::size_t> train;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.trial[i] != t) train.push_back(i);
      }
      const Dataset tr = data.subset(train);
      const Dataset held = data.subset(rows_of.at(t));
      const FittedModel bl = fit(tr, baseline);
      const FittedModel tg = fit(tr, target);
      out.folds[f] = {t, held.size(), delta_llh(tg, bl, held)};
    } catch (const Error& e) {
      throw e.within("fold " + t);
    }
  });
  double lt = 0.0, lb = 0.0;
  for (const auto& f : out.folds) {
    out.diffs.insert(out.diffs.end(), f.d.diffs.begin(), f.d.diffs.end());
    lt += f.d.ll_target * static_cast<double>(f.n);
    lb += f.d.ll_baseline * static_cast<double>(f.n);
  }
  const double n = static_cast<double>(out.diffs.size());
  out.delta = std::accumulate(out.diffs.begin(), out.diffs.end(), 0.0) / n;
  out.ll_target = lt / n;
  out.ll_baseline = lb / n;
  return out;
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& values, std::size_t iterations,
                                       double level, std::uint64_t seed) {
  if (values.empty()) fail(ErrorCode::kInvalidArgument, "bootstrap needs at least one value");
  if (!(level > 0 && level < 1)) fail(ErrorCode::kInvalidArgument, "confidence level must be in (0, 1)");
  if (iterations == 0) fail(ErrorCode::kInvalidArgument, "bootstrap needs iterations");
  std::vector<double> means(iterations);
  const std::size_t n = values.size();
  for (std::size_t b = 0; b < iterations; ++b) {
    Rng rng(derive_seed(seed, b));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[rng.below(n)];
    means[b] = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(iterations - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, iterations - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  const double a = (1.0 - level) / 2.0;
  return {quantile(a), quantile(1.0 - a)};
}

double permutation_test(const std::vector<double>& diffs, std::size_t iterations, std::uint64_t seed) {
  if (diffs.empty()) fail(ErrorCode::kInvalidArgument, "permutation test needs differences");
  const double observed = std::accumulate(diffs.begin(), diffs.end(), 0.0);
  std::size_t hits = 0;
  for (std::size_t b = 0; b < iterations; ++b) {
    Rng rng(derive_seed(seed, b));
    double s = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
      if (i % 64 == 0) bits = rng.next();
      s += (bits & 1) ? diffs[i] : -diffs[i];
      bits >>= 1;
    }
    hits += s >= observed;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(iterations + 1);
}

std::string significance_stars(double p) {
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

const std::vector<std::string>& eval_columns() {
  static const std::vector<std::string> c = {"inventory", "measure", "ll_bl", "ll_tgt",
                                             "delta_llh", "ci_lo",   "ci_hi", "p"};
  return c;
}

void write_eval_tsv(std::ostream& out, const std::vector<EvalRow>& rows, const std::vector<std::string>& header) {
  write_header_comments(out, header);
  const auto& c = eval_columns();
  for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "\t" : "") << c[i];
  out << '\n';
  for (const auto& r : rows) {
    out << tsv_escape(r.inventory) << '\t' << tsv_escape(r.measure) << '\t' << format_number(r.ll_bl) << '\t'
        << format_number(r.ll_tgt) << '\t' << format_number(r.delta_llh) << '\t' << format_number(r.ci_lo)
        << '\t' << format_number(r.ci_hi) << '\t' << format_number(r.p) << '\n';
  }
}

}  // namespace unitsurp
