#include "conecpt/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "conecpt/error.hpp"

namespace conecpt {

double PathExpr::evaluate(const std::vector<Vector>& path) const
{
    switch (kind) {
    case Kind::constant: return value;
    case Kind::terminal: return path.back()[static_cast<Eigen::Index>(index)];
    case Kind::path_max: {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& y : path)
            m = std::max(m, y[static_cast<Eigen::Index>(index)]);
        return m;
    }
    case Kind::path_min: {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& y : path)
            m = std::min(m, y[static_cast<Eigen::Index>(index)]);
        return m;
    }
    case Kind::sum: {
        double s = 0.0;
        for (const auto& a : args)
            s += a.evaluate(path);
        return s;
    }
    case Kind::max: {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& a : args)
            m = std::max(m, a.evaluate(path));
        return m;
    }
    case Kind::min: {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& a : args)
            m = std::min(m, a.evaluate(path));
        return m;
    }
    case Kind::scale: return value * args.front().evaluate(path);
    }
    return 0.0;
}

void PathExpr::validate(std::size_t m) const
{
    switch (kind) {
    case Kind::constant:
        if (!std::isfinite(value))
            throw InvalidArgument("reference expression: constant is not finite");
        return;
    case Kind::terminal:
    case Kind::path_max:
    case Kind::path_min:
        if (index >= m)
            throw InvalidArgument("reference expression: Y component " + std::to_string(index + 1) +
                                  " out of range");
        return;
    case Kind::scale:
        if (args.size() != 1 || !std::isfinite(value))
            throw InvalidArgument("reference expression: scale takes a finite factor and one argument");
        break;
    case Kind::sum:
    case Kind::max:
    case Kind::min:
        if (args.empty())
            throw InvalidArgument("reference expression: empty argument list");
        break;
    }
    for (const auto& a : args)
        a.validate(m);
}

ReferenceMap ReferenceMap::constant(Vector value)
{
    ReferenceMap r;
    r.kind_ = Kind::constant;
    r.offset_ = std::move(value);
    return r;
}

ReferenceMap ReferenceMap::linear(Vector offset, Matrix matrix)
{
    if (matrix.rows() != offset.size())
        throw InvalidArgument("reference map: matrix rows must match offset length");
    ReferenceMap r;
    r.kind_ = Kind::linear;
    r.offset_ = std::move(offset);
    r.matrix_ = std::move(matrix);
    return r;
}

ReferenceMap ReferenceMap::componentwise(std::vector<PathExpr> components)
{
    ReferenceMap r;
    r.kind_ = Kind::componentwise;
    r.components_ = std::move(components);
    return r;
}

std::size_t ReferenceMap::dim() const
{
    return kind_ == Kind::componentwise ? components_.size() : static_cast<std::size_t>(offset_.size());
}

void ReferenceMap::validate(std::size_t d, std::size_t m) const
{
    if (dim() != d)
        throw InvalidArgument("reference map has dimension " + std::to_string(dim()) + ", expected " +
                              std::to_string(d));
    if (kind_ != Kind::componentwise && !offset_.allFinite())
        throw InvalidArgument("reference map: offset is not finite");
    if (kind_ == Kind::linear) {
        if (static_cast<std::size_t>(matrix_.cols()) != m)
            throw InvalidArgument("reference map: matrix must have m columns");
        if (!matrix_.allFinite())
            throw InvalidArgument("reference map: matrix is not finite");
    }
    for (const auto& c : components_)
        c.validate(m);
}

Vector ReferenceMap::evaluate(const std::vector<Vector>& path) const
{
    if (path.empty())
        throw InvalidArgument("reference map: empty path");
    switch (kind_) {
    case Kind::constant: return offset_;
    case Kind::linear: return offset_ + matrix_ * path.back();
    case Kind::componentwise: {
        Vector w(static_cast<Eigen::Index>(components_.size()));
        for (std::size_t i = 0; i < components_.size(); ++i)
            w[static_cast<Eigen::Index>(i)] = components_[i].evaluate(path);
        return w;
    }
    }
    return offset_;
}

}  // namespace conecpt
