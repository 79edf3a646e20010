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

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "unitsurp/eyetrack/eyetrack.hpp"

namespace unitsurp {

enum class Measure { kFirstFixation, kGazeDuration, kTotalReadingTime };

// "FF", "GD", "TRT" or the column names.
Measure parse_measure(std::string_view name);
std::string_view measure_name(Measure m);  // FF, GD, TRT
double measure_value(const UnitMeasures& m, Measure which);

// Cubic regression spline with knots at quantiles of the data, natural at
// the end knots and linear beyond them. Value parameterization: the raw
// coefficients are the function's values at the knots.
class CrSpline {
 public:
  // Fewer distinct values than k shrink the basis; two give a plain linear
  // term and one is DegenerateInput.
  static CrSpline fit(const std::vector<double>& x, int k);

  bool linear() const { return linear_; }
  const std::vector<double>& knots() const { return knots_; }
  int raw_size() const { return linear_ ? 1 : static_cast<int>(knots_.size()); }
  int size() const { return linear_ ? 1 : raw_size() - 1; }

  Eigen::MatrixXd raw_design(const std::vector<double>& x) const;
  Eigen::MatrixXd raw_penalty() const;
  // Sum-to-zero over the fitting data.
  Eigen::MatrixXd design(const std::vector<double>& x) const;
  Eigen::MatrixXd penalty() const;

 private:
  bool linear_ = false;
  double center_ = 0.0;  // linear case
  std::vector<double> knots_;
  Eigen::MatrixXd f_;  // second derivatives at the knots from values
  Eigen::MatrixXd s_;
  Eigen::MatrixXd z_;  // null space of the centering constraint
};

struct SmoothTerm {
  std::string predictor;
  int k = 6;
};

struct ModelSpec {
  std::string role = "baseline";
  std::vector<SmoothTerm> smooths;
  bool participant_intercepts = true;
  std::vector<std::string> participant_slopes;
  // When set, used as is instead of the GCV search. Relative to the scale of
  // the matching block of X^T X.
  std::map<std::string, double> fixed_lambda;
  std::optional<double> fixed_ridge;

  std::vector<std::string> predictors() const;
  std::string to_json() const;
  static ModelSpec from_json(std::string_view text);
};

// Length and unigram frequency of the unit and its two predecessors.
ModelSpec baseline_spec();
// Baseline plus surprisal of the unit and its two predecessors.
ModelSpec target_spec();

// Regression input. The key identifies a row across train/held-out splits.
struct Dataset {
  std::vector<std::string> keys;
  std::vector<std::string> participant;
  std::vector<std::string> trial;
  std::map<std::string, std::vector<double>> x;  // NaN where missing
  std::vector<double> log_y;

  std::size_t size() const { return log_y.size(); }
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

// NonPositiveMeasure when the measure is not positive on some row.
Dataset make_dataset(const ReadingTable& table, Measure measure);

struct TermSummary {
  std::string predictor;
  bool dropped = false;  // constant predictor
  double lambda = 0.0;
  double edf = 0.0;
  // beta' V^-1 beta / edf with V the Bayesian posterior covariance. A rough
  // analogue of a smooth-term F statistic, not comparable to mgcv's.
  double wald = 0.0;
};

class FittedModel {
 public:
  std::vector<double> predict(const Dataset& d) const;

  const ModelSpec& spec() const { return spec_; }
  double sigma2() const { return sigma2_; }
  double edf() const { return edf_; }
  double rss() const { return rss_; }
  double gcv() const { return gcv_; }
  double ridge() const { return ridge_; }
  std::size_t n() const { return n_; }
  const std::vector<TermSummary>& terms() const { return terms_; }
  const std::vector<std::string>& training_keys() const { return train_keys_; }
  bool trained_on(const std::string& key) const;
  // Estimated smooth of one predictor at raw values, without the intercept.
  std::vector<double> smooth(const std::string& predictor, const std::vector<double>& x) const;

 private:
  friend FittedModel fit(const Dataset& data, const ModelSpec& spec);

  struct Smooth {
    std::string predictor;
    double mean = 0.0, sd = 1.0;
    CrSpline basis;
    int offset = 0;  // first column in the fixed block
  };
  struct Slope {
    std::string predictor;
    double mean = 0.0, sd = 1.0;
  };

  std::vector<double> zscored(const Dataset& d, const std::string& predictor, double mean,
                              double sd) const;

  ModelSpec spec_;
  std::vector<Smooth> smooths_;
  std::vector<Slope> slopes_;
  bool intercepts_ = true;
  Eigen::VectorXd fixed_;  // intercept then smooth columns
  std::map<std::string, Eigen::VectorXd> participants_;
  std::vector<TermSummary> terms_;
  std::vector<std::string> train_keys_;  // sorted
  double sigma2_ = 0.0, edf_ = 0.0, rss_ = 0.0, gcv_ = 0.0, ridge_ = 0.0;
  std::size_t n_ = 0;
};

// Penalized least squares on log_y; smoothing and ridge strengths by GCV on
// a 20-point log grid, coordinate-wise, two sweeps. SingularDesign when the
// penalized system is not positive definite or leaves no residual degrees
// of freedom.
FittedModel fit(const Dataset& data, const ModelSpec& spec);

// Log-normal density on the measure scale.
double lognormal_logpdf(double log_r, double mu, double sigma2);

struct DeltaLlh {
  double delta = 0.0;  // mean of diffs
  double ll_target = 0.0, ll_baseline = 0.0;  // per-observation means
  std::vector<double> diffs;
};

// EmptyHeldout for no rows; InvalidArgument when a held-out key was used in
// training by either model.
DeltaLlh delta_llh(const FittedModel& target, const FittedModel& baseline, const Dataset& heldout);

struct FoldResult {
  std::string trial;
  std::size_t n = 0;
  DeltaLlh d;
};

struct LooResult {
  std::vector<FoldResult> folds;
  std::vector<double> diffs;  // pooled, fold order
  double delta = 0.0, ll_target = 0.0, ll_baseline = 0.0;

  std::vector<double> per_trial() const;
};

// One fold per trial. Errors carry the fold's trial.
LooResult loo_cv(const Dataset& data, const ModelSpec& baseline, const ModelSpec& target,
                 unsigned jobs = 1);

// Percentile interval of the resampled mean of trial values.
std::pair<double, double> bootstrap_ci(const std::vector<double>& values, std::size_t iterations,
                                       double level, std::uint64_t seed);

// One-sided sign-flip test for a positive mean.
double permutation_test(const std::vector<double>& diffs, std::size_t iterations, std::uint64_t seed);

std::string significance_stars(double p);

struct EvalRow {
  std::string inventory;
  std::string measure;
  double ll_bl = 0.0, ll_tgt = 0.0, delta_llh = 0.0, ci_lo = 0.0, ci_hi = 0.0, p = 1.0;
};

const std::vector<std::string>& eval_columns();
void write_eval_tsv(std::ostream& out, const std::vector<EvalRow>& rows,
                    const std::vector<std::string>& header = {});

}  // namespace unitsurp
