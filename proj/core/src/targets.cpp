// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/targets.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "binflow/error.hpp"
#include "binflow/quadrature.hpp"

namespace binflow {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxSearchCap = 1'000'000;
constexpr std::size_t kBetaNodes = 256;

double log_poisson(double rate, std::int64_t k) {
  const auto kd = static_cast<double>(k);
  return -rate + kd * std::log(rate) - std::lgamma(kd + 1.0);
}

double log_negative_binomial(double r, double p, std::int64_t k) {
  const auto kd = static_cast<double>(k);
  return std::lgamma(kd + r) - std::lgamma(r) - std::lgamma(kd + 1.0) + r * std::log(p) +
         kd * std::log1p(-p);
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double a : v) s += std::exp(a - m);
  return m + std::log(s);
}

void require(bool ok, std::string_view family, const std::string& message) {
  if (!ok) throw ParameterError(std::string(family) + ": " + message);
}

void validate_weights(std::string_view name, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    require(w > 0.0 && w <= 1.0, name, "mixture weights must lie in (0, 1]");
    total += w;
  }
  require(std::abs(total - 1.0) < 1e-9, name, "mixture weights must sum to 1");
}

// Beta mixture of negative binomials. With p = sin^2(u) the Beta density and
// Jacobian combine into 2 sin^{2a-1}(u) cos^{2b-1}(u), which is smooth for the
// reference parameters, so plain Gauss-Legendre in u converges quickly.
class BetaNegativeBinomial {
 public:
  BetaNegativeBinomial(double r, double a, double b, std::size_t nodes)
      : r_(r), a_(a), b_(b) {
    const QuadratureRule rule = gauss_legendre(nodes, 0.0, std::numbers::pi / 2.0);
    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    log_sin_.reserve(nodes);
    log_cos_.reserve(nodes);
    log_w_.reserve(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      const double u = rule.nodes[i];
      log_sin_.push_back(std::log(std::sin(u)));
      log_cos_.push_back(std::log(std::cos(u)));
      log_w_.push_back(std::log(rule.weights[i]) + std::numbers::ln2 - log_beta);
    }
    scratch_.resize(nodes);
  }

  double log_pmf(std::int64_t k) {
    const auto kd = static_cast<double>(k);
    const double log_coef = std::lgamma(kd + r_) - std::lgamma(r_) - std::lgamma(kd + 1.0);
    for (std::size_t i = 0; i < log_w_.size(); ++i) {
      scratch_[i] = log_w_[i] + (2.0 * (r_ + a_) - 1.0) * log_sin_[i] +
                    (2.0 * (kd + b_) - 1.0) * log_cos_[i];
    }
    return log_coef + log_sum_exp(scratch_);
  }

 private:
  double r_, a_, b_;
  std::vector<double> log_sin_, log_cos_, log_w_, scratch_;
};

// Untruncated log-pmf of a family, evaluated one support point at a time.
class FamilyEvaluator {
 public:
  FamilyEvaluator(Family family, std::span<const double> params)
      : family_(family), params_(params.begin(), params.end()) {
    const std::string_view name = to_string(family);
    switch (family) {
      case Family::Poisson:
        require(params_.size() == 1, name, "expected {rate}");
        require(params_[0] > 0.0 && std::isfinite(params_[0]), name, "rate must be > 0");
        break;
      case Family::PoissonMixture: {
        require(!params_.empty() && params_.size() % 2 == 0, name,
                "expected {w_1, rate_1, w_2, rate_2, ...}");
        std::vector<double> w;
        for (std::size_t i = 0; i < params_.size(); i += 2) {
          w.push_back(params_[i]);
          require(params_[i + 1] > 0.0, name, "component rates must be > 0");
        }
        validate_weights(name, w);
        break;
      }
      case Family::ZIP:
        require(params_.size() == 2, name, "expected {w_0, rate}");
        require(params_[0] > 0.0 && params_[0] < 1.0, name, "w_0 must lie in (0, 1)");
        require(params_[1] > 0.0, name, "rate must be > 0");
        break;
      case Family::NBM: {
        require(!params_.empty() && params_.size() % 3 == 0, name,
                "expected {w_1, r_1, p_1, w_2, r_2, p_2, ...}");
        std::vector<double> w;
        for (std::size_t i = 0; i < params_.size(); i += 3) {
          w.push_back(params_[i]);
          require(params_[i + 1] > 0.0, name, "r must be > 0");
          require(params_[i + 2] > 0.0 && params_[i + 2] < 1.0, name, "p must lie in (0, 1)");
        }
        validate_weights(name, w);
        break;
      }
      case Family::BNB:
        require(params_.size() == 3, name, "expected {r, a, b}");
        require(params_[0] > 0.0 && params_[1] > 0.0 && params_[2] > 0.0, name,
                "r, a, b must be > 0");
        bnb_.emplace(params_[0], params_[1], params_[2], kBetaNodes);
        break;
      case Family::Zipf:
        require(params_.size() == 1, name, "expected {alpha}");
        require(params_[0] > 1.0, name, "alpha must be > 1");
        break;
      case Family::YuleSimon:
        require(params_.size() == 1, name, "expected {rho}");
        require(params_[0] > 0.0, name, "rho must be > 0");
        break;
      case Family::Custom:
        throw ParameterError("custom tables are built with make_custom_target");
    }
  }

  double log_pmf(std::int64_t x) {
    switch (family_) {
      case Family::Poisson:
        return log_poisson(params_[0], x);
      case Family::PoissonMixture: {
        std::vector<double> terms;
        for (std::size_t i = 0; i < params_.size(); i += 2)
          terms.push_back(std::log(params_[i]) + log_poisson(params_[i + 1], x));
        return log_sum_exp(terms);
      }
      case Family::ZIP: {
        const double w0 = params_[0];
        const double lp = std::log1p(-w0) + log_poisson(params_[1], x);
        if (x == 0) {
          const double terms[] = {std::log(w0), lp};
          return log_sum_exp(terms);
        }
        return lp;
      }
      case Family::NBM: {
        std::vector<double> terms;
        for (std::size_t i = 0; i < params_.size(); i += 3)
          terms.push_back(std::log(params_[i]) +
                          log_negative_binomial(params_[i + 1], params_[i + 2], x));
        return log_sum_exp(terms);
      }
      case Family::BNB:
        return bnb_->log_pmf(x);
      case Family::Zipf:
        // Unnormalized; the normalizer is the truncated sum.
        return x == 0 ? kNegInf : -params_[0] * std::log(static_cast<double>(x));
      case Family::YuleSimon: {
        if (x == 0) return kNegInf;
        const double rho = params_[0];
        const auto xd = static_cast<double>(x);
        return std::log(rho) + std::lgamma(xd) + std::lgamma(rho + 1.0) -
               std::lgamma(xd + rho + 1.0);
      }
      case Family::Custom:
        break;
    }
    return kNegInf;
  }

  // Total untruncated mass of the unnormalized log_pmf; 1 except for Zipf.
  double total_mass() const {
    if (family_ == Family::Zipf) return std::riemann_zeta(params_[0]);
    return 1.0;
  }

 private:
  Family family_;
  std::vector<double> params_;
  std::optional<BetaNegativeBinomial> bnb_;
};

std::string format_params(std::span<const double> params) {
  std::ostringstream os;
  os << std::setprecision(6);
  for (std::size_t i = 0; i < params.size(); ++i) os << (i ? "," : "") << params[i];
  return os.str();
}

}  // namespace

std::string_view to_string(Family family) noexcept {
  switch (family) {
    case Family::Poisson: return "Poisson";
    case Family::PoissonMixture: return "PoissonMixture";
    case Family::ZIP: return "ZIP";
    case Family::NBM: return "NBM";
    case Family::BNB: return "BNB";
    case Family::Zipf: return "Zipf";
    case Family::YuleSimon: return "YuleSimon";
    case Family::Custom: return "Custom";
  }
  return "Unknown";
}

Family family_from_string(std::string_view name) {
  for (Family f : {Family::Poisson, Family::PoissonMixture, Family::ZIP, Family::NBM,
                   Family::BNB, Family::Zipf, Family::YuleSimon, Family::Custom}) {
    if (to_string(f) == name) return f;
  }
  throw ParameterError("unknown target family '" + std::string(name) + "'");
}

double default_max_tail_mass(Family family) noexcept {
  switch (family) {
    case Family::Poisson:
    case Family::ZIP:
    case Family::Custom:
      return 1e-8;
    default:
      return 5e-2;
  }
}

TargetPmf::TargetPmf(Family family, std::vector<double> params, std::vector<double> weights,
                     double tail_mass)
    : support_cap_(static_cast<int>(weights.size()) - 1),
      family_(family),
      params_(std::move(params)),
      probs_(std::move(weights)),
      tail_mass_(tail_mass) {
  const double total = std::accumulate(probs_.begin(), probs_.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total))
    throw ParameterError("probability table has no finite positive mass");
  for (double& p : probs_) p /= total;
  log_probs_.resize(probs_.size());
  std::transform(probs_.begin(), probs_.end(), log_probs_.begin(),
                 [](double p) { return p > 0.0 ? std::log(p) : kNegInf; });
}

double TargetPmf::prob(std::int64_t x) const {
  if (x < 0 || x > support_cap_)
    throw RangeError("x=" + std::to_string(x) + " outside support {0.." +
                     std::to_string(support_cap_) + "}");
  return probs_[static_cast<std::size_t>(x)];
}

std::string TargetPmf::label() const {
  if (family_ == Family::Custom) return "Custom[" + std::to_string(size()) + "]";
  return std::string(to_string(family_)) + "(" + format_params(params_) + ")";
}

TargetPmf make_target(Family family, std::span<const double> params, int support_cap,
                      std::optional<double> max_tail_mass) {
  if (family == Family::Custom) return make_custom_target(params);
  if (support_cap < 1) throw ParameterError("support_cap must be >= 1");
  const double threshold = max_tail_mass.value_or(default_max_tail_mass(family));

  FamilyEvaluator eval(family, params);
  const double total = eval.total_mass();
  std::vector<double> weights(static_cast<std::size_t>(support_cap) + 1);
  double kept = 0.0;
  for (int x = 0; x <= support_cap; ++x) {
    const double lp = eval.log_pmf(x);
    const double p = std::isfinite(lp) ? std::exp(lp) : 0.0;
    if (!std::isfinite(p) || p < 0.0)
      throw NumericError(std::string(to_string(family)) + ": non-finite mass at x=" +
                         std::to_string(x));
    weights[static_cast<std::size_t>(x)] = p;
    kept += p;
  }
  const double tail = std::max(0.0, 1.0 - kept / total);

  if (tail > threshold) {
    int cap = support_cap;
    double mass = kept;
    while (1.0 - mass / total > threshold && cap < kMaxSearchCap) {
      ++cap;
      const double lp = eval.log_pmf(cap);
      if (std::isfinite(lp)) mass += std::exp(lp);
    }
    std::ostringstream os;
    os << to_string(family) << ": tail mass " << tail << " beyond support_cap " << support_cap
       << " exceeds " << threshold << "; need support_cap >= " << cap;
    throw TruncationError(os.str(), cap);
  }
  return TargetPmf(family, std::vector<double>(params.begin(), params.end()), std::move(weights),
                   tail);
}

TargetPmf make_target(Family family, std::initializer_list<double> params, int support_cap,
                      std::optional<double> max_tail_mass) {
  return make_target(family, std::span<const double>(params.begin(), params.size()),
                     support_cap, max_tail_mass);
}

TargetPmf make_custom_target(std::span<const double> weights) {
  if (weights.size() < 2) throw ParameterError("Custom: table needs support_cap >= 1");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ParameterError("Custom: weights must be finite and non-negative");
  }
  std::vector<double> w(weights.begin(), weights.end());
  return TargetPmf(Family::Custom, w, w, 0.0);
}

TargetPmf make_custom_target(std::initializer_list<double> weights) {
  return make_custom_target(std::span<const double>(weights.begin(), weights.size()));
}

double log_pmf(const TargetPmf& pmf, std::int64_t x) {
  if (x < 0 || x > pmf.support_cap())
    throw RangeError("log_pmf: x=" + std::to_string(x) + " outside support {0.." +
                     std::to_string(pmf.support_cap()) + "}");
  return pmf.log_probs()[static_cast<std::size_t>(x)];
}

Moments moments(const TargetPmf& pmf) {
  const auto p = pmf.probs();
  double mean = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) mean += static_cast<double>(x) * p[x];
  double var = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    const double d = static_cast<double>(x) - mean;
    var += d * d * p[x];
  }
  return {mean, var};
}

std::vector<std::int64_t> sample_target(const TargetPmf& pmf, std::size_t n, Rng& rng) {
  const auto p = pmf.probs();
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  std::int64_t last = 0;
  for (std::size_t x = 0; x < p.size(); ++x)
    if (p[x] > 0.0) last = static_cast<std::int64_t>(x);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::int64_t> out(n);
  for (auto& v : out) {
    const double u = unif(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    v = std::min(static_cast<std::int64_t>(it - cdf.begin()), last);
  }
  return out;
}

std::vector<std::int64_t> sample_target(const TargetPmf& pmf, std::size_t n,
                                        std::uint64_t seed) {
  Rng rng(seed);
  return sample_target(pmf, n, rng);
}

void write_pmf_csv(std::ostream& out, const TargetPmf& pmf) {
  out << "x,prob\n" << std::setprecision(17);
  for (std::size_t x = 0; x < pmf.size(); ++x) out << x << ',' << pmf.probs()[x] << '\n';
}

const std::vector<TargetSpec>& synthetic_targets() {
  static const std::vector<TargetSpec> specs = {
      {"poisson", Family::Poisson, {5.0}, 40},
      {"poisson_mixture", Family::PoissonMixture, {0.1, 1.0, 0.9, 100.0}, 140},
      {"zip", Family::ZIP, {0.7, 5.0}, 50},
      {"nbm", Family::NBM, {0.8, 1.0, 0.9, 0.2, 10.0, 0.1}, 150},
      {"bnb", Family::BNB, {5.0, 1.5, 1.5}, 100},
      {"zipf", Family::Zipf, {1.7}, 50},
      {"yule_simon", Family::YuleSimon, {2.0}, 50},
  };
  return specs;
}

const TargetSpec& synthetic_target(std::string_view name) {
  for (const auto& s : synthetic_targets())
    if (s.name == name) return s;
  throw ParameterError("unknown synthetic target '" + std::string(name) + "'");
}

}  // namespace binflow
