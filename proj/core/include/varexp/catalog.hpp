#pragma once

#include <string>
#include <vector>

#include "varexp/exponent.hpp"
#include "varexp/fields.hpp"

namespace varexp {

/// Named formula catalogs addressable from the CLI. Unknown names throw
/// std::invalid_argument listing the known patterns.
///
/// Fields:    "bump:<n>:<radius>", "linear", "counterexample:<q>",
///            "tent:<radius>"
/// Exponents: "const:<p>", "radial:counterexample:<q>:<pbar>:<pinf>",
///            "smooth:sine", "jump:<delta>"
/// Domains:   "interval:<a>:<b>", "box:<a1>:<b1>[:<a2>:<b2>[:<a3>:<b3>]]",
///            "ball:<n>:<R>", "annulus:<n>:<rin>:<rout>"
ScalarField make_field(const std::string& name, int dimension);
ExponentField make_exponent(const std::string& name, int dimension);
Domain make_domain(const std::string& spec);

const std::vector<std::string>& known_field_names();
const std::vector<std::string>& known_exponent_names();
const std::vector<std::string>& known_domain_names();

}  // namespace varexp
