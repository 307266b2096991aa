#pragma once

#include <stdexcept>
#include <string>

namespace egarnier {

/// Base class for all numerical/structural failures raised by this library.
struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

struct not_singular : error {
    explicit not_singular(const std::string& what = "matrix is not singular to tolerance") : error(what) {}
};

struct zero_matrix : error {
    explicit zero_matrix(const std::string& what = "matrix is numerically zero") : error(what) {}
};

struct degenerate_triple : error {
    explicit degenerate_triple(const std::string& what = "two of the three frame points coincide") : error(what) {}
};

struct colliding_parameters : error {
    explicit colliding_parameters(const std::string& what = "singular points collide modulo the nome lattice") : error(what) {}
};

struct singular_at_point : error {
    explicit singular_at_point(const std::string& what = "matrix is singular at the requested point") : error(what) {}
};

struct proportional_kernels : error {
    explicit proportional_kernels(const std::string& what = "kernels at the two pivot points are proportional") : error(what) {}
};

struct degenerate_images : error {
    explicit degenerate_images(const std::string& what = "images at the two pivot points are proportional") : error(what) {}
};

struct both_columns_vanish : error {
    explicit both_columns_vanish(const std::string& what = "both columns vanish; state is degenerate") : error(what) {}
};

struct base_point_collision : error {
    explicit base_point_collision(const std::string& what = "state sits on a base point of the map") : error(what) {}
};

struct pole_in_formula : error {
    explicit pole_in_formula(const std::string& what = "evaluation point hits a pole of the formula") : error(what) {}
};

struct index_error : std::out_of_range {
    explicit index_error(const std::string& what = "index out of range") : std::out_of_range(what) {}
};

} // namespace egarnier
