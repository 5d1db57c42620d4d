#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace conecpt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultTol = 1e-9;

/// Exchange-rate matrix: rates(i, j) units of asset i buy one unit of asset j.
class BidAskMatrix {
public:
    explicit BidAskMatrix(Matrix rates);

    /// Proportional-cost market where asset 0 is cash and asset j trades at
    /// price prices[j] (prices[0] must be 1): rates(i, j) = (1 + lambda) p_j / p_i.
    static BidAskMatrix proportional(const Vector& prices, double lambda);

    std::size_t dim() const { return static_cast<std::size_t>(rates_.rows()); }
    const Matrix& rates() const { return rates_; }

private:
    Matrix rates_;
};

struct InteriorCertificate {
    bool interior = false;
    Vector certificate;  ///< z with |z|_inf <= 1 maximizing the margin
    double margin = 0.0; ///< min_k z.xi_k / |xi_k|
};

/// Polyhedral cone of solvent positions. Holds the primal generators and the
/// dual generators computed from them. Always contains the positive orthant.
class SolvencyCone {
public:
    /// Builds the cone spanned by `primal` (zero vectors dropped). Throws
    /// InvalidArgument when the positive orthant is not contained.
    static SolvencyCone from_generators(std::vector<Vector> primal, double tol = kDefaultTol);

    /// Generators {e_i} U {rates(i,j) e_i - e_j : i != j}.
    static SolvencyCone from_bid_ask(const BidAskMatrix& pi);

    /// Reassembles a cone from stored generator lists (deserialization).
    /// The dual list is validated against the primal one.
    static SolvencyCone from_parts(std::vector<Vector> primal, std::vector<Vector> dual,
                                   double tol = kDefaultTol);

    std::size_t dim() const { return dim_; }
    const std::vector<Vector>& primal_generators() const { return primal_; }
    const std::vector<Vector>& dual_generators() const { return dual_; }

    /// min over dual generators z of z.v / |z|; +inf when the cone is all of R^d.
    double membership_margin(const Vector& v) const;
    bool contains(const Vector& v, double tol = kDefaultTol) const;

    /// Membership decided by LP feasibility of v = sum lambda_k xi_k, lambda >= 0.
    bool contains_lp(const Vector& v, double tol = kDefaultTol) const;
    /// L1 residual of the best nonnegative combination of primal generators.
    double lp_residual(const Vector& v) const;

    /// Efficient-friction test: max eps s.t. z.xi_k >= eps |xi_k|, |z|_inf <= 1.
    InteriorCertificate interior(double tol = kDefaultTol) const;

    /// max{c : x - c e_numeraire in G}, computed in closed form from the dual
    /// generators (the LP optimum by duality). Throws InvalidArgument when the
    /// problem is unbounded or infeasible.
    double liquidation_value(const Vector& x, std::size_t numeraire) const;
    /// The same quantity by solving the primal LP directly.
    double liquidation_value_lp(const Vector& x, std::size_t numeraire) const;

private:
    SolvencyCone(std::size_t dim, std::vector<Vector> primal, std::vector<Vector> dual);

    void check_dim(const Vector& v) const;

    std::size_t dim_ = 0;
    std::vector<Vector> primal_;
    std::vector<Vector> dual_;
};

/// Generators of {z : z.g >= 0 for every g in `primal`} by double description.
/// The result contains +/- pairs spanning the lineality space (if any) and the
/// unit-normalized extreme rays of the pointed part. Intended for d <= 8.
std::vector<Vector> dual_generators(std::span<const Vector> primal);

}  // namespace conecpt
