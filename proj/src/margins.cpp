#include "copjoint/margins.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "copjoint/copula.hpp"
#include "copjoint/errors.hpp"

namespace copjoint {

std::string to_string(Link link) {
  switch (link) {
    case Link::Probit: return "probit";
    case Link::Logit: return "logit";
    case Link::Cloglog: return "cloglog";
  }
  return "?";
}

Link parse_link(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "probit" || s == "p") return Link::Probit;
  if (s == "logit" || s == "l") return Link::Logit;
  if (s == "cloglog" || s == "c") return Link::Cloglog;
  throw DomainError("unknown link '" + std::string(name) + "'");
}

char link_code(Link link) {
  switch (link) {
    case Link::Probit: return 'p';
    case Link::Logit: return 'l';
    case Link::Cloglog: return 'c';
  }
  return '?';
}

double link_cdf(Link link, double x) {
  switch (link) {
    case Link::Probit:
      return norm_cdf(x);
    case Link::Logit:
      // exp(-log1p(exp(-x))) avoids overflow on both tails
      return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    case Link::Cloglog:
      return -std::expm1(-std::exp(std::min(x, 700.0)));
  }
  return 0.0;
}

double link_density(Link link, double x) {
  switch (link) {
    case Link::Probit:
      return norm_pdf(x);
    case Link::Logit: {
      const double e = std::exp(-std::abs(x));
      return e / ((1.0 + e) * (1.0 + e));
    }
    case Link::Cloglog: {
      const double ex = std::exp(std::min(x, 700.0));
      return std::exp(x - ex);
    }
  }
  return 0.0;
}

double latent_error_cdf(Link link, double x) { return 1.0 - link_cdf(link, -x); }

double marginal_prob(Link link, double eta) {
  // 1 - F(-eta) with F the latent error CDF collapses to the inverse link;
  // evaluated directly to keep full precision in the upper tail.
  return link_cdf(link, eta);
}

double marginal_prob(Link link, const Eigen::VectorXd& coefficients, const Eigen::VectorXd& design_row) {
  if (coefficients.size() != design_row.size())
    throw DomainError("marginal_prob: coefficient dimension " + std::to_string(coefficients.size()) +
                      " does not match design row dimension " + std::to_string(design_row.size()));
  return marginal_prob(link, coefficients.dot(design_row));
}

}  // namespace copjoint
