#include "varexp/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace varexp {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse " + what + " from '" + s + "'");
  }
  if (pos != s.size())
    throw std::invalid_argument("cannot parse " + what + " from '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& what) {
  const double v = to_double(s, what);
  const int i = static_cast<int>(v);
  if (i != v) throw std::invalid_argument(what + " must be an integer, got '" + s + "'");
  return i;
}

[[noreturn]] void unknown(const std::string& kind, const std::string& name,
                          const std::vector<std::string>& known) {
  std::string msg = "unknown " + kind + " '" + name + "'; known names: ";
  for (std::size_t i = 0; i < known.size(); ++i)
    msg += (i ? ", " : "") + known[i];
  throw std::invalid_argument(msg);
}

}  // namespace

const std::vector<std::string>& known_field_names() {
  static const std::vector<std::string> names = {
      "bump:<n>:<radius>", "linear", "counterexample:<q>", "tent:<radius>"};
  return names;
}

const std::vector<std::string>& known_exponent_names() {
  static const std::vector<std::string> names = {
      "const:<p>", "radial:counterexample:<q>:<pbar>:<pinf>", "smooth:sine",
      "jump:<delta>"};
  return names;
}

const std::vector<std::string>& known_domain_names() {
  static const std::vector<std::string> names = {
      "interval:<a>:<b>", "box:<a1>:<b1>[:<a2>:<b2>[:<a3>:<b3>]]",
      "ball:<n>:<R>", "annulus:<n>:<rin>:<rout>"};
  return names;
}

ScalarField make_field(const std::string& name, int dimension) {
  const auto parts = split(name, ':');
  if (parts.empty()) unknown("field", name, known_field_names());
  const std::string& kind = parts[0];
  if (kind == "linear" && parts.size() == 1) {
    if (dimension != 1)
      throw std::invalid_argument("linear field is 1-d; domain dimension mismatch");
    return linear_field();
  }
  if (kind == "bump" && parts.size() == 3) {
    const int n = to_int(parts[1], "bump dimension");
    if (n != dimension)
      throw std::invalid_argument("bump dimension does not match the domain");
    return bump(n, to_double(parts[2], "bump radius"));
  }
  if (kind == "tent" && parts.size() == 2)
    return tent_field(dimension, to_double(parts[1], "tent radius"));
  if (kind == "counterexample" && parts.size() == 2)
    return counterexample_field(to_double(parts[1], "counterexample q"), dimension);
  unknown("field", name, known_field_names());
}

ExponentField make_exponent(const std::string& name, int dimension) {
  const auto parts = split(name, ':');
  if (parts.empty()) unknown("exponent", name, known_exponent_names());
  const std::string& kind = parts[0];
  if (kind == "const" && parts.size() == 2)
    return make_constant_exponent(to_double(parts[1], "constant exponent"), dimension);
  if (kind == "smooth" && parts.size() == 2 && parts[1] == "sine") {
    // p(x, y) = 2 + 0.5 sin(a.x + b.y), a = (1, 0.7, 0.4), b = (0.6, 0.3, 0.2):
    // smooth, bounded into [1.5, 2.5], Lipschitz in y hence log-Holder.
    auto eval = [](const Point& x, const Point& y) {
      const double phase = x[0] + 0.7 * x[1] + 0.4 * x[2] + 0.6 * y[0] +
                           0.3 * y[1] + 0.2 * y[2];
      return 2.0 + 0.5 * std::sin(phase);
    };
    return make_general_exponent(eval, dimension, 1.5, 2.5);
  }
  if (kind == "radial" && parts.size() == 5 && parts[1] == "counterexample") {
    const double q = to_double(parts[2], "counterexample q");
    const double pbar = to_double(parts[3], "counterexample pbar");
    const double pinf = to_double(parts[4], "counterexample pinf");
    if (!(q > 1.0))
      throw std::invalid_argument("counterexample exponent requires q > 1");
    auto smoothstep = [](double t) {
      t = std::clamp(t, 0.0, 1.0);
      return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
    };
    auto profile = [pbar, pinf, smoothstep](double r) {
      return pbar + (pinf - pbar) * smoothstep(r);
    };
    return make_radial_exponent(profile, dimension);
  }
  if (kind == "jump" && parts.size() == 2) {
    // Discontinuous in y across the hyperplane {y1 = x1}: the shipped
    // non-log-Holder exponent used to show what failure looks like.
    const double delta = to_double(parts[1], "jump size");
    if (!(delta > 0.0)) throw std::invalid_argument("jump size must be positive");
    auto eval = [delta](const Point& x, const Point& y) {
      return 2.0 + (y[0] >= x[0] ? delta : 0.0);
    };
    return make_general_exponent(eval, dimension, 2.0, 2.0 + delta);
  }
  unknown("exponent", name, known_exponent_names());
}

Domain make_domain(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.empty()) unknown("domain", spec, known_domain_names());
  const std::string& kind = parts[0];
  if (kind == "interval" && parts.size() == 3)
    return Domain::interval(to_double(parts[1], "interval a"),
                            to_double(parts[2], "interval b"));
  if (kind == "box" && parts.size() >= 3 && parts.size() % 2 == 1) {
    const int n = static_cast<int>((parts.size() - 1) / 2);
    Point lo{}, hi{};
    for (int i = 0; i < n; ++i) {
      lo[i] = to_double(parts[1 + 2 * i], "box bound");
      hi[i] = to_double(parts[2 + 2 * i], "box bound");
    }
    return Domain::box(n, lo, hi);
  }
  if (kind == "ball" && parts.size() == 3)
    return Domain::ball(to_int(parts[1], "ball dimension"),
                        to_double(parts[2], "ball radius"));
  if (kind == "annulus" && parts.size() == 4)
    return Domain::annulus(to_int(parts[1], "annulus dimension"),
                           to_double(parts[2], "annulus inner radius"),
                           to_double(parts[3], "annulus outer radius"));
  unknown("domain", spec, known_domain_names());
}

}  // namespace varexp
