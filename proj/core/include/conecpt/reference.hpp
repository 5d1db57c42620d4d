#pragma once

#include <cstddef>
#include <vector>

#include "conecpt/cone.hpp"

namespace conecpt {

/// Scalar expression over a driving-process path, used to build reference
/// points componentwise.
struct PathExpr {
    enum class Kind { constant, terminal, path_max, path_min, sum, max, min, scale };

    Kind kind = Kind::constant;
    double value = 0.0;      ///< constant value, or factor for `scale`
    std::size_t index = 0;   ///< Y component for terminal / path_max / path_min
    std::vector<PathExpr> args;

    static PathExpr constant(double v) { return {Kind::constant, v, 0, {}}; }
    static PathExpr terminal(std::size_t i) { return {Kind::terminal, 0.0, i, {}}; }

    double evaluate(const std::vector<Vector>& path) const;
    void validate(std::size_t m) const;
};

/// Reference point W = h(Y) as a function of the whole path.
class ReferenceMap {
public:
    enum class Kind { constant, linear, componentwise };

    static ReferenceMap constant(Vector value);
    /// W = offset + matrix * Y(t_N).
    static ReferenceMap linear(Vector offset, Matrix matrix);
    static ReferenceMap componentwise(std::vector<PathExpr> components);
    static ReferenceMap zero(std::size_t d) { return constant(Vector::Zero(static_cast<Eigen::Index>(d))); }

    Kind kind() const { return kind_; }
    std::size_t dim() const;
    const Vector& offset() const { return offset_; }
    const Matrix& matrix() const { return matrix_; }
    const std::vector<PathExpr>& components() const { return components_; }

    /// Checks the map against the dimensions it will be evaluated with.
    void validate(std::size_t d, std::size_t m) const;
    Vector evaluate(const std::vector<Vector>& path) const;

private:
    Kind kind_ = Kind::constant;
    Vector offset_;
    Matrix matrix_;
    std::vector<PathExpr> components_;
};

}  // namespace conecpt
