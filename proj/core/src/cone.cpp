#include "conecpt/cone.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "conecpt/error.hpp"
#include "conecpt/linprog.hpp"

namespace conecpt {

BidAskMatrix::BidAskMatrix(Matrix rates) : rates_(std::move(rates))
{
    if (rates_.rows() == 0 || rates_.rows() != rates_.cols())
        throw InvalidArgument("bid-ask matrix must be square and non-empty");
    for (Eigen::Index i = 0; i < rates_.rows(); ++i) {
        for (Eigen::Index j = 0; j < rates_.cols(); ++j) {
            double r = rates_(i, j);
            if (!std::isfinite(r) || r <= 0.0)
                throw InvalidArgument("bid-ask entries must be finite and strictly positive");
        }
        if (rates_(i, i) != 1.0)
            throw InvalidArgument("bid-ask diagonal must be exactly 1");
    }
}

BidAskMatrix BidAskMatrix::proportional(const Vector& prices, double lambda)
{
    if (prices.size() == 0)
        throw InvalidArgument("price vector is empty");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw InvalidArgument("transaction cost rate must be finite and >= 0");
    if (prices[0] != 1.0)
        throw InvalidArgument("asset 0 is the numeraire and must have price 1");
    for (Eigen::Index i = 0; i < prices.size(); ++i)
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i]))
            throw InvalidArgument("prices must be finite and strictly positive");

    const auto d = prices.size();
    Matrix rates(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            rates(i, j) = i == j ? 1.0 : (1.0 + lambda) * prices[j] / prices[i];
    return BidAskMatrix(std::move(rates));
}

// ---------------------------------------------------------------------------
// Double description

namespace {

class BitSet {
public:
    explicit BitSet(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
    void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
    bool subset_of(const BitSet& o) const
    {
        for (std::size_t w = 0; w < words_.size(); ++w)
            if ((words_[w] & ~o.words_[w]) != 0)
                return false;
        return true;
    }
    std::size_t count() const
    {
        std::size_t c = 0;
        for (auto w : words_)
            c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
    BitSet operator&(const BitSet& o) const
    {
        BitSet r = *this;
        for (std::size_t w = 0; w < words_.size(); ++w)
            r.words_[w] &= o.words_[w];
        return r;
    }

private:
    std::vector<std::uint64_t> words_;
};

struct Ray {
    Vector y;
    BitSet active;
};

constexpr double kZeroTol = 1e-10;

// Extreme rays of {y : B y >= 0} where B has full column rank.
std::vector<Vector> pointed_extreme_rays(const Matrix& rows_in)
{
    const auto n = static_cast<std::size_t>(rows_in.rows());
    const auto r = rows_in.cols();

    Matrix rows = rows_in;
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        rows.row(i).normalize();

    // Greedy choice of r independent rows.
    std::vector<std::size_t> basis_rows;
    Matrix acc(0, r);
    for (std::size_t i = 0; i < n && static_cast<Eigen::Index>(basis_rows.size()) < r; ++i) {
        Matrix trial(acc.rows() + 1, r);
        trial << acc, rows.row(static_cast<Eigen::Index>(i));
        Eigen::FullPivLU<Matrix> lu(trial);
        lu.setThreshold(1e-10);
        if (lu.rank() == trial.rows()) {
            acc = std::move(trial);
            basis_rows.push_back(i);
        }
    }
    if (static_cast<Eigen::Index>(basis_rows.size()) != r)
        throw LpFailure("double description: failed to find an initial basis");

    Matrix inv = acc.inverse();
    std::vector<Ray> rays;
    for (Eigen::Index k = 0; k < r; ++k) {
        Ray ray{inv.col(k).normalized(), BitSet(n)};
        for (Eigen::Index other = 0; other < r; ++other)
            if (other != k)
                ray.active.set(basis_rows[static_cast<std::size_t>(other)]);
        rays.push_back(std::move(ray));
    }

    std::vector<bool> in_basis(n, false);
    for (auto b : basis_rows)
        in_basis[b] = true;

    const std::size_t min_common = r >= 2 ? static_cast<std::size_t>(r - 2) : 0;

    for (std::size_t row = 0; row < n; ++row) {
        if (in_basis[row])
            continue;
        const Vector b = rows.row(static_cast<Eigen::Index>(row)).transpose();

        std::vector<double> s(rays.size());
        std::vector<std::size_t> pos, neg;
        std::vector<Ray> next;
        for (std::size_t k = 0; k < rays.size(); ++k) {
            s[k] = b.dot(rays[k].y);
            if (s[k] > kZeroTol)
                pos.push_back(k);
            else if (s[k] < -kZeroTol)
                neg.push_back(k);
        }
        if (neg.empty()) {
            for (std::size_t k = 0; k < rays.size(); ++k)
                if (std::abs(s[k]) <= kZeroTol)
                    rays[k].active.set(row);
            continue;
        }

        for (std::size_t k = 0; k < rays.size(); ++k) {
            if (s[k] >= -kZeroTol) {
                Ray kept = rays[k];
                if (s[k] <= kZeroTol)
                    kept.active.set(row);
                next.push_back(std::move(kept));
            }
        }

        if (r >= 2) {
            for (auto p : pos) {
                for (auto q : neg) {
                    BitSet common = rays[p].active & rays[q].active;
                    if (common.count() < min_common)
                        continue;
                    bool adjacent = true;
                    for (std::size_t k = 0; k < rays.size() && adjacent; ++k) {
                        if (k == p || k == q)
                            continue;
                        if (common.subset_of(rays[k].active))
                            adjacent = false;
                    }
                    if (!adjacent)
                        continue;
                    Vector y = s[p] * rays[q].y - s[q] * rays[p].y;
                    double norm = y.norm();
                    if (norm < 1e-14)
                        continue;
                    Ray fresh{y / norm, common};
                    fresh.active.set(row);
                    next.push_back(std::move(fresh));
                }
            }
        }
        rays = std::move(next);
        if (rays.empty())
            break;
    }

    std::vector<Vector> out;
    for (auto& ray : rays) {
        bool dup = false;
        for (const auto& o : out)
            if ((o - ray.y).norm() < 1e-9)
                dup = true;
        if (!dup)
            out.push_back(ray.y);
    }
    return out;
}

}  // namespace

std::vector<Vector> dual_generators(std::span<const Vector> primal)
{
    if (primal.empty())
        throw InvalidArgument("dual_generators: no generators given");
    const auto d = primal.front().size();
    if (d == 0)
        throw InvalidArgument("dual_generators: zero-dimensional generators");

    std::vector<const Vector*> nonzero;
    for (const auto& g : primal) {
        if (g.size() != d)
            throw InvalidArgument("dual_generators: generators have mixed dimensions");
        if (!g.allFinite())
            throw InvalidArgument("dual_generators: generator is not finite");
        if (g.norm() > 0.0)
            nonzero.push_back(&g);
    }
    if (nonzero.empty())
        throw InvalidArgument("dual_generators: all generators are zero");

    Matrix a(static_cast<Eigen::Index>(nonzero.size()), d);
    for (std::size_t i = 0; i < nonzero.size(); ++i)
        a.row(static_cast<Eigen::Index>(i)) = nonzero[i]->transpose().normalized();

    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    svd.setThreshold(1e-10);
    const auto rank = svd.rank();
    const Matrix& v = svd.matrixV();

    std::vector<Vector> out;
    for (Eigen::Index k = rank; k < d; ++k) {
        out.push_back(v.col(k));
        out.push_back(-v.col(k));
    }

    Matrix row_space = v.leftCols(rank);
    for (const auto& y : pointed_extreme_rays(a * row_space))
        out.push_back((row_space * y).normalized());
    return out;
}

// ---------------------------------------------------------------------------
// SolvencyCone

SolvencyCone::SolvencyCone(std::size_t dim, std::vector<Vector> primal, std::vector<Vector> dual)
    : dim_(dim), primal_(std::move(primal)), dual_(std::move(dual))
{
}

namespace {

std::vector<Vector> drop_zero(std::vector<Vector> gens)
{
    std::erase_if(gens, [](const Vector& g) { return g.norm() == 0.0; });
    return gens;
}

void check_orthant(const SolvencyCone& cone, double tol)
{
    for (std::size_t i = 0; i < cone.dim(); ++i) {
        Vector e = Vector::Unit(static_cast<Eigen::Index>(cone.dim()), static_cast<Eigen::Index>(i));
        if (!cone.contains(e, tol))
            throw InvalidArgument("cone does not contain basis vector e_" + std::to_string(i + 1));
    }
}

}  // namespace

SolvencyCone SolvencyCone::from_generators(std::vector<Vector> primal, double tol)
{
    primal = drop_zero(std::move(primal));
    if (primal.empty())
        throw InvalidArgument("cone needs at least one nonzero generator");
    const auto d = static_cast<std::size_t>(primal.front().size());
    auto dual = conecpt::dual_generators(primal);
    SolvencyCone cone(d, std::move(primal), std::move(dual));
    check_orthant(cone, tol);
    return cone;
}

SolvencyCone SolvencyCone::from_bid_ask(const BidAskMatrix& pi)
{
    const auto d = static_cast<Eigen::Index>(pi.dim());
    std::vector<Vector> gens;
    gens.reserve(static_cast<std::size_t>(d * d));
    for (Eigen::Index i = 0; i < d; ++i)
        gens.push_back(Vector::Unit(d, i));
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i == j)
                continue;
            Vector g = Vector::Zero(d);
            g[i] = pi.rates()(i, j);
            g[j] = -1.0;
            gens.push_back(std::move(g));
        }
    }
    return from_generators(std::move(gens));
}

SolvencyCone SolvencyCone::from_parts(std::vector<Vector> primal, std::vector<Vector> dual, double tol)
{
    SolvencyCone fresh = from_generators(std::move(primal), tol);
    for (const auto& z : dual) {
        if (z.size() != static_cast<Eigen::Index>(fresh.dim()))
            throw InvalidArgument("dual generator has wrong dimension");
        if (z.norm() == 0.0)
            throw InvalidArgument("dual generator is zero");
    }
    auto matches = [](const Vector& a, const std::vector<Vector>& pool) {
        Vector an = a.normalized();
        return std::any_of(pool.begin(), pool.end(),
                           [&](const Vector& b) { return (an - b.normalized()).norm() < 1e-6; });
    };
    bool consistent = dual.size() == fresh.dual_.size();
    for (std::size_t i = 0; consistent && i < dual.size(); ++i)
        consistent = matches(dual[i], fresh.dual_) && matches(fresh.dual_[i], dual);
    if (!consistent)
        throw InvalidArgument("stored dual generators do not match the primal generators");
    fresh.dual_ = std::move(dual);
    return fresh;
}

void SolvencyCone::check_dim(const Vector& v) const
{
    if (static_cast<std::size_t>(v.size()) != dim_)
        throw InvalidArgument("vector dimension " + std::to_string(v.size()) + " does not match cone dimension " +
                              std::to_string(dim_));
}

double SolvencyCone::membership_margin(const Vector& v) const
{
    check_dim(v);
    double m = std::numeric_limits<double>::infinity();
    for (const auto& z : dual_)
        m = std::min(m, z.dot(v) / z.norm());
    return m;
}

bool SolvencyCone::contains(const Vector& v, double tol) const
{
    if (!(tol >= 0.0))
        throw InvalidArgument("tolerance must be nonnegative");
    if (!v.allFinite())
        throw InvalidArgument("membership query vector is not finite");
    return membership_margin(v) >= -tol;
}

double SolvencyCone::lp_residual(const Vector& v) const
{
    check_dim(v);
    const std::size_t n = primal_.size();
    const std::size_t d = dim_;
    // variables: lambda (n), s_plus (d), s_minus (d)
    lp::Problem prob(n + 2 * d);
    for (std::size_t j = 0; j < 2 * d; ++j)
        prob.set_objective_coefficient(n + j, -1.0);
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> row(n + 2 * d, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            row[k] = primal_[k][static_cast<Eigen::Index>(i)];
        row[n + i] = 1.0;
        row[n + d + i] = -1.0;
        prob.add_constraint(std::move(row), lp::Sense::equal, v[static_cast<Eigen::Index>(i)]);
    }
    auto sol = lp::maximize(prob);
    if (sol.status != lp::Status::optimal)
        throw LpFailure(std::string("membership LP: ") + lp::to_string(sol.status));
    return std::max(0.0, -sol.objective);
}

bool SolvencyCone::contains_lp(const Vector& v, double tol) const
{
    if (!(tol >= 0.0))
        throw InvalidArgument("tolerance must be nonnegative");
    return lp_residual(v) <= tol * std::max(1.0, v.norm());
}

InteriorCertificate SolvencyCone::interior(double tol) const
{
    const std::size_t d = dim_;
    // variables: z' = z + 1 in [0, 2] (d), eps >= 0
    lp::Problem prob(d + 1);
    prob.set_objective_coefficient(d, 1.0);
    for (const auto& g : primal_) {
        std::vector<double> row(d + 1, 0.0);
        double shift = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            row[i] = g[static_cast<Eigen::Index>(i)];
            shift += g[static_cast<Eigen::Index>(i)];
        }
        row[d] = -g.norm();
        prob.add_constraint(std::move(row), lp::Sense::greater_equal, shift);
    }
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> row(d + 1, 0.0);
        row[i] = 1.0;
        prob.add_constraint(std::move(row), lp::Sense::less_equal, 2.0);
    }
    auto sol = lp::maximize(prob);
    if (sol.status != lp::Status::optimal)
        throw LpFailure(std::string("efficient-friction LP: ") + lp::to_string(sol.status));

    InteriorCertificate out;
    out.certificate = Vector(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
        out.certificate[static_cast<Eigen::Index>(i)] = sol.x[i] - 1.0;
    out.margin = sol.x[d];
    out.interior = out.margin > tol;
    return out;
}

double SolvencyCone::liquidation_value(const Vector& x, std::size_t numeraire) const
{
    check_dim(x);
    if (numeraire >= dim_)
        throw InvalidArgument("numeraire index out of range");
    const auto num = static_cast<Eigen::Index>(numeraire);

    // x - c e in G  <=>  z.x >= c z_num for every dual generator z.
    double upper = std::numeric_limits<double>::infinity();
    double lower = -std::numeric_limits<double>::infinity();
    for (const auto& z : dual_) {
        double zx = z.dot(x);
        double zn = z[num];
        if (zn > 1e-14)
            upper = std::min(upper, zx / zn);
        else if (zn < -1e-14)
            lower = std::max(lower, zx / zn);
        else if (zx < -1e-12 * z.norm() * std::max(1.0, x.norm()))
            throw InvalidArgument("liquidation infeasible: position cannot be brought into the cone");
    }
    if (!std::isfinite(upper))
        throw InvalidArgument("liquidation unbounded: cone is not pointed in the numeraire direction");
    if (lower > upper + 1e-12)
        throw InvalidArgument("liquidation infeasible");
    return upper;
}

double SolvencyCone::liquidation_value_lp(const Vector& x, std::size_t numeraire) const
{
    check_dim(x);
    if (numeraire >= dim_)
        throw InvalidArgument("numeraire index out of range");
    const std::size_t n = primal_.size();
    const std::size_t d = dim_;
    // variables: lambda (n), c_plus, c_minus.   sum lambda xi + c e_num = x
    lp::Problem prob(n + 2);
    prob.set_objective_coefficient(n, 1.0);
    prob.set_objective_coefficient(n + 1, -1.0);
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<double> row(n + 2, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            row[k] = primal_[k][static_cast<Eigen::Index>(i)];
        if (i == numeraire) {
            row[n] = 1.0;
            row[n + 1] = -1.0;
        }
        prob.add_constraint(std::move(row), lp::Sense::equal, x[static_cast<Eigen::Index>(i)]);
    }
    auto sol = lp::maximize(prob);
    switch (sol.status) {
    case lp::Status::optimal: return sol.objective;
    case lp::Status::unbounded:
        throw InvalidArgument("liquidation unbounded: cone is not pointed in the numeraire direction");
    case lp::Status::infeasible: throw InvalidArgument("liquidation infeasible");
    default: throw LpFailure(std::string("liquidation LP: ") + lp::to_string(sol.status));
    }
}

}  // namespace conecpt
