#pragma once

#include <functional>
#include <string>
#include <vector>

#include "iva/errors.hpp"

namespace iva::contrast {

// Spherical super-Gaussian source model. g is the contrast G(r) applied to
// the norm of a source component vector; weight is G'(r) / (2 r), the
// quadratic majorizer slope, which must be positive, continuous and
// non-increasing for r > 0.
struct ContrastModel {
    std::string name;
    std::function<double(double)> g;
    std::function<double(double)> weight; // already floored at r_floor
    double r_floor = 1e-10;
};

// Laplace model: G(r) = r, weight(r) = 1 / (2 r). The weight is evaluated at
// max(r, r_floor) so silent frames do not divide by zero.
ContrastModel laplace();

// Lookup by CLI name. Only "laplace" ships; register_model extends the
// registry with user-defined models.
const ContrastModel& find(const std::string& name);
void register_model(ContrastModel model);
std::vector<std::string> registered_names();

} // namespace iva::contrast
