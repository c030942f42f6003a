#include "sbl/propriety_gate.hpp"

#include <cmath>
#include "json.hpp"
#include <sstream>

#include "sbl/errors.hpp"
#include "sbl/linalg_core.hpp"
#include "sbl/quadrature.hpp"

namespace sbl {

LambdaPrior LambdaPrior::gamma(double a, double b) { return {Kind::gamma, a, b, 1.0}; }
LambdaPrior LambdaPrior::improper_power(double a) { return {Kind::improper_power, a, 0.0, 1.0}; }
LambdaPrior LambdaPrior::jeffreys() { return {Kind::jeffreys, 0.0, 0.0, 1.0}; }
LambdaPrior LambdaPrior::half_cauchy(double scale) { return {Kind::half_cauchy, 0.0, 0.0, scale}; }
LambdaPrior LambdaPrior::gumbel_type2(double scale) { return {Kind::gumbel_type2, 0.0, 0.0, scale}; }

LambdaPrior LambdaPrior::from_shape_rate(double a, double b) {
  if (a > 0.0 && b > 0.0) return gamma(a, b);
  if (b == 0.0) return a == 0.0 ? jeffreys() : improper_power(a);
  return {Kind::improper_gamma_form, a, b, 1.0};
}

bool LambdaPrior::is_proper() const noexcept {
  switch (kind) {
    case Kind::gamma: return a > 0.0 && b > 0.0;
    case Kind::half_cauchy:
    case Kind::gumbel_type2: return scale > 0.0;
    default: return false;
  }
}

bool LambdaPrior::is_gamma_form() const noexcept {
  return kind == Kind::gamma || kind == Kind::improper_power || kind == Kind::jeffreys ||
         kind == Kind::improper_gamma_form;
}

double LambdaPrior::shape() const noexcept { return kind == Kind::jeffreys ? 0.0 : a; }
double LambdaPrior::rate() const noexcept {
  return (kind == Kind::jeffreys || kind == Kind::improper_power) ? 0.0 : b;
}

void LambdaPrior::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(scale))
    throw_input("lambda prior parameters must be finite");
  switch (kind) {
    case Kind::gamma:
      if (!(a > 0.0 && b > 0.0)) throw_config("gamma lambda prior requires a > 0 and b > 0");
      break;
    case Kind::half_cauchy:
    case Kind::gumbel_type2:
      if (!(scale > 0.0)) throw_config("lambda prior scale must be positive");
      break;
    default: break;
  }
}

std::string_view to_string(LambdaPrior::Kind kind) noexcept {
  switch (kind) {
    case LambdaPrior::Kind::gamma: return "gamma";
    case LambdaPrior::Kind::improper_power: return "improper_power";
    case LambdaPrior::Kind::jeffreys: return "jeffreys";
    case LambdaPrior::Kind::half_cauchy: return "half_cauchy";
    case LambdaPrior::Kind::gumbel_type2: return "gumbel_type2";
    case LambdaPrior::Kind::improper_gamma_form: return "improper_gamma_form";
  }
  return "unknown";
}

void ClassifierPriorSpec::validate() const {
  lambda_prior.validate();
  if (!std::isfinite(c) || !std::isfinite(d)) throw_input("classifier sigma2 prior parameters must be finite");
  if (!std::isfinite(u1) || !std::isfinite(u2) || !(u1 < u2))
    throw_input("classifier theta support requires finite u1 < u2");
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0)) throw_input("classifier lambda0 must be positive");
}

std::string_view to_string(ProprietyStatus s) noexcept {
  switch (s) {
    case ProprietyStatus::proper: return "Proper";
    case ProprietyStatus::improper: return "Improper";
    case ProprietyStatus::undetermined: return "Undetermined";
  }
  return "unknown";
}

std::string_view to_string(ProprietyRule r) noexcept {
  switch (r) {
    case ProprietyRule::thm1_necessary_violated: return "Thm1_necessary_violated";
    case ProprietyRule::thm2_sufficient_met: return "Thm2_sufficient_met";
    case ProprietyRule::remark1_met: return "Remark1_met";
    case ProprietyRule::prop1_jeffreys: return "Prop1_jeffreys";
    case ProprietyRule::all_proper_hierarchy: return "AllProperHierarchy";
    case ProprietyRule::no_rule_applies: return "NoRuleApplies";
  }
  return "unknown";
}

namespace {

nlohmann::json lambda_prior_json(const LambdaPrior& p) {
  nlohmann::json j{{"kind", to_string(p.kind)}};
  switch (p.kind) {
    case LambdaPrior::Kind::gamma:
    case LambdaPrior::Kind::improper_gamma_form: j["a"] = p.a; j["b"] = p.b; break;
    case LambdaPrior::Kind::improper_power: j["a"] = p.a; j["b"] = 0.0; break;
    case LambdaPrior::Kind::jeffreys: break;
    default: j["scale"] = p.scale; break;
  }
  return j;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

ProprietyVerdict make(ProprietyStatus s, ProprietyRule r, std::string why) {
  ProprietyVerdict v;
  v.status = s;
  v.rule = r;
  v.explanation = std::move(why);
  return v;
}

}  // namespace

ProprietyVerdict check_rvm_propriety(const LambdaPrior& prior, double c, double d,
                                     const std::optional<GateData>& data, std::optional<long> n) {
  prior.validate();
  if (!std::isfinite(c) || !std::isfinite(d)) throw_input("sigma2 prior parameters c, d must be finite");
  if (data) {
    if (data->K.rows() != data->y.size())
      throw_input("gate data: K has " + std::to_string(data->K.rows()) + " rows but y has " +
                  std::to_string(data->y.size()) + " entries");
    if (n && *n != data->y.size()) throw_input("gate: explicit n disagrees with the supplied data");
    n = static_cast<long>(data->y.size());
  }
  if (n && *n < 1) throw_input("gate: n must be at least 1");

  auto finish = [&](ProprietyVerdict v) {
    v.n = n;
    v.inputs = nlohmann::json{{"model", "rvm"}, {"lambda_prior", lambda_prior_json(prior)}, {"c", c},
                              {"d", d}, {"data_supplied", data.has_value()}}
                   .dump();
    return v;
  };

  using K = LambdaPrior::Kind;
  const double a = prior.shape();
  if (prior.kind == K::jeffreys || prior.kind == K::improper_power) {
    if (!(a > -0.5 && a < 0.0)) {
      std::string what = prior.kind == K::jeffreys ? "pi(lambda_i) ~ 1/lambda_i (a = 0, b = 0)"
                                                   : "b = 0 with a = " + fmt(a);
      return finish(make(ProprietyStatus::improper, ProprietyRule::thm1_necessary_violated,
                         what + " violates the necessary condition a in (-1/2, 0); the posterior is "
                                "improper for every prior on 1/sigma^2"));
    }
    return finish(make(ProprietyStatus::undetermined, ProprietyRule::no_rule_applies,
                       "b = 0 with a = " + fmt(a) +
                           " satisfies the necessary condition a in (-1/2, 0), but no sufficient "
                           "condition covers an improper lambda prior"));
  }
  if (prior.kind == K::improper_gamma_form) {
    if (prior.b < 0.0)
      return finish(make(ProprietyStatus::improper, ProprietyRule::thm1_necessary_violated,
                         "prior not integrable at infinity: b = " + fmt(prior.b) +
                             " < 0 makes lambda^(a-1) exp(-b lambda) grow without bound, and the "
                             "likelihood stays bounded below as lambda -> infinity (outside the "
                             "b = 0 theorem, analytically forced)"));
    return finish(make(ProprietyStatus::undetermined, ProprietyRule::no_rule_applies,
                       "a = " + fmt(prior.a) + " <= 0 with b > 0 gives a prior improper at zero; "
                                               "no rule covers this case"));
  }

  // Proper lambda prior: sufficient conditions on the 1/sigma^2 prior.
  if (c <= 0.0 && !n) throw Error(ErrorCode::insufficient_information,
                                  "c <= 0: condition c > -n/2 needs n (supply data or n)");
  if (d <= 0.0 && !data)
    throw Error(ErrorCode::insufficient_information,
                "d <= 0: condition y^T(I - P_K)y + 2d > 0 needs the responses and design matrix");

  const bool c_ok = c > 0.0 || c > -0.5 * static_cast<double>(*n);
  std::optional<double> residual;
  bool resid_ok = d > 0.0;
  if (d <= 0.0) {
    residual = projection_residual(data->K, data->y);
    const double tol = 1e-12 * std::max(1.0, data->y.squaredNorm());
    resid_ok = *residual + 2.0 * d > tol;
  }

  const ProprietyRule rule =
      prior.kind == K::gamma ? ProprietyRule::thm2_sufficient_met : ProprietyRule::remark1_met;
  ProprietyVerdict v;
  if (c_ok && resid_ok) {
    std::string why = prior.kind == K::gamma ? "proper Gamma(" + fmt(prior.a) + ", " + fmt(prior.b) + ") prior on every lambda_i"
                                             : "proper " + std::string(to_string(prior.kind)) + " prior on every lambda_i";
    why += ", c = " + fmt(c) + " > -n/2";
    why += residual ? ", y^T(I - P_K)y + 2d = " + fmt(*residual + 2.0 * d) + " > 0"
                    : ", d = " + fmt(d) + " > 0";
    v = make(ProprietyStatus::proper, rule, why);
  } else {
    std::string why = "lambda prior is proper but ";
    if (!c_ok) why += "c = " + fmt(c) + " <= -n/2 = " + fmt(-0.5 * static_cast<double>(*n));
    if (!c_ok && !resid_ok) why += " and ";
    if (!resid_ok) why += "y^T(I - P_K)y + 2d = " + fmt(*residual + 2.0 * d) + " is not positive";
    why += "; the sufficient conditions do not hold and no other rule applies";
    v = make(ProprietyStatus::undetermined, ProprietyRule::no_rule_applies, why);
  }
  v.residual_used = residual;
  return finish(std::move(v));
}

ProprietyVerdict check_rvm_propriety(const RvmHyperParams& hp, const std::optional<GateData>& data,
                                     std::optional<long> n) {
  if (!std::isfinite(hp.a) || !std::isfinite(hp.b)) throw_input("hyperparameters a, b must be finite");
  ProprietyVerdict v = check_rvm_propriety(LambdaPrior::from_shape_rate(hp.a, hp.b), hp.c, hp.d, data, n);
  v.inputs = nlohmann::json{{"model", "rvm"}, {"a", hp.a}, {"b", hp.b}, {"c", hp.c}, {"d", hp.d},
                            {"data_supplied", data.has_value()}}
                 .dump();
  return v;
}

ProprietyVerdict check_classifier_propriety(const ClassifierPriorSpec& spec) {
  spec.validate();
  ProprietyVerdict v;
  if (spec.lambda_prior.kind == LambdaPrior::Kind::jeffreys) {
    v = make(ProprietyStatus::improper, ProprietyRule::prop1_jeffreys,
             "Jeffreys prior pi(lambda) ~ prod lambda_i^-1 (lambda_0 included) makes the joint "
             "posterior of (beta, z, sigma2, lambda, theta) improper");
  } else if (spec.lambda_prior.is_proper() && spec.c > 0.0 && spec.d > 0.0) {
    v = make(ProprietyStatus::proper, ProprietyRule::all_proper_hierarchy,
             "every level is a proper density (lambda prior, IG(c, d) on sigma2, U(u1, u2) on theta) "
             "and exp{-sum l} <= 1 for nonnegative losses; this rule is outside the published "
             "theorems");
  } else {
    v = make(ProprietyStatus::undetermined, ProprietyRule::no_rule_applies,
             "no rule covers this classifier prior configuration");
  }
  v.inputs = nlohmann::json{{"model", "classifier"},
                            {"lambda_prior", lambda_prior_json(spec.lambda_prior)},
                            {"c", spec.c},
                            {"d", spec.d},
                            {"u1", spec.u1},
                            {"u2", spec.u2},
                            {"lambda0", spec.lambda0}}
                 .dump();
  return v;
}

std::optional<double> lemma4_constant(double a) {
  if (!std::isfinite(a)) throw_input("lemma4: a must be finite");
  if (!(a > -0.5 && a < 0.0)) return std::nullopt;
  const quad::Options opt{0.0, 1e-13, 4000, 4};
  // z in [1, 2]: z = 1 + s^(-1/a) removes the (z - 1)^-(a+1) singularity.
  const double p = -1.0 / a;
  auto head = [a, p](double s) {
    const double z = 1.0 + std::pow(s, p);
    return p * std::pow(z + 1.0, -(a + 1.0));
  };
  // z in [2, inf): z = w^(-1/(2a+1)) maps the algebraic tail onto (0, w0].
  const double q = 2.0 * a + 1.0;
  auto tail = [a, q](double w) {
    if (w <= 0.0) return 1.0 / q;
    const double zinv2 = std::pow(w, 2.0 / q);
    return std::pow(1.0 - zinv2, -(a + 1.0)) / q;
  };
  const double w0 = std::pow(2.0, -q);
  const auto h = quad::integrate(head, 0.0, 1.0, opt);
  const auto t = quad::integrate(tail, 0.0, w0, opt);
  return 2.0 * (h.value + t.value);
}

std::optional<double> lemma4_closed_form(double a, double k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw_input("lemma4: k must be positive");
  const auto c = lemma4_constant(a);
  if (!c) return std::nullopt;
  return *c * std::pow(k, -(a + 0.5));
}

}  // namespace sbl
