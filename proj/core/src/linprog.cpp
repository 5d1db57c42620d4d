#include "conecpt/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace conecpt::lp {

const char* to_string(Status status)
{
    switch (status) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

Problem::Problem(std::size_t num_vars) : num_vars_(num_vars), objective_(num_vars, 0.0)
{
    if (num_vars == 0)
        throw SolverError("linear program needs at least one variable");
}

void Problem::set_objective(std::vector<double> c)
{
    if (c.size() != num_vars_)
        throw SolverError("objective length does not match variable count");
    objective_ = std::move(c);
}

void Problem::set_objective_coefficient(std::size_t var, double value)
{
    objective_.at(var) = value;
}

void Problem::add_constraint(std::vector<double> coefficients, Sense sense, double rhs)
{
    if (coefficients.size() != num_vars_)
        throw SolverError("constraint length does not match variable count");
    if (!std::isfinite(rhs))
        throw SolverError("constraint right-hand side is not finite");
    rows_.push_back({std::move(coefficients), sense, rhs});
}

namespace {

class Tableau {
public:
    Tableau(const Problem& problem, const Options& options) : opt_(options), n_orig_(problem.num_vars())
    {
        const auto& rows = problem.constraints();
        m_ = rows.size();

        std::size_t n_slack = 0;
        std::size_t n_art = 0;
        for (const auto& r : rows) {
            Sense s = effective_sense(r);
            if (s != Sense::equal)
                ++n_slack;
            if (s != Sense::less_equal)
                ++n_art;
        }
        art_begin_ = n_orig_ + n_slack;
        cols_ = art_begin_ + n_art;
        width_ = cols_ + 1;

        t_.assign((m_ + 1) * width_, 0.0);
        basis_.assign(m_, 0);
        allowed_.assign(cols_, true);

        std::size_t slack = n_orig_;
        std::size_t art = art_begin_;
        for (std::size_t i = 0; i < m_; ++i) {
            const auto& r = rows[i];
            double sign = r.rhs < 0.0 ? -1.0 : 1.0;
            Sense s = effective_sense(r);
            for (std::size_t j = 0; j < n_orig_; ++j)
                at(i, j) = sign * r.coefficients[j];
            at(i, cols_) = sign * r.rhs;
            if (s == Sense::less_equal) {
                at(i, slack) = 1.0;
                basis_[i] = slack++;
            }
            else if (s == Sense::greater_equal) {
                at(i, slack++) = -1.0;
                at(i, art) = 1.0;
                basis_[i] = art++;
            }
            else {
                at(i, art) = 1.0;
                basis_[i] = art++;
            }
        }
        identity_cols_ = basis_;
    }

    Solution solve(const std::vector<double>& objective)
    {
        Solution sol;

        // Phase 1: maximize -sum(artificials).
        if (art_begin_ < cols_) {
            std::vector<double> cost(cols_, 0.0);
            for (std::size_t j = art_begin_; j < cols_; ++j)
                cost[j] = -1.0;
            load_costs(cost);
            Status st = iterate(sol.iterations);
            if (st == Status::iteration_limit) {
                sol.status = st;
                return sol;
            }
            double rhs_scale = 1.0;
            for (std::size_t i = 0; i < m_; ++i)
                rhs_scale = std::max(rhs_scale, std::abs(at(i, cols_)));
            if (-current_objective() > opt_.feasibility_tol * rhs_scale) {
                sol.status = Status::infeasible;
                return sol;
            }
            drive_out_artificials();
            for (std::size_t j = art_begin_; j < cols_; ++j)
                allowed_[j] = false;
        }

        std::vector<double> cost(cols_, 0.0);
        std::copy(objective.begin(), objective.end(), cost.begin());
        load_costs(cost);
        Status st = iterate(sol.iterations);
        sol.status = st;
        if (st != Status::optimal)
            return sol;

        sol.x.assign(n_orig_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (removed(i))
                continue;
            if (basis_[i] < n_orig_)
                sol.x[basis_[i]] = std::max(0.0, at(i, cols_));
        }
        sol.objective = 0.0;
        for (std::size_t j = 0; j < n_orig_; ++j)
            sol.objective += objective[j] * sol.x[j];
        return sol;
    }

private:
    static Sense effective_sense(const Constraint& r)
    {
        if (r.rhs >= 0.0 || r.sense == Sense::equal)
            return r.sense;
        return r.sense == Sense::less_equal ? Sense::greater_equal : Sense::less_equal;
    }

    double& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
    double at(std::size_t i, std::size_t j) const { return t_[i * width_ + j]; }
    bool removed(std::size_t i) const { return basis_[i] == kRemoved; }

    double current_objective() const { return -at(m_, cols_); }

    void load_costs(const std::vector<double>& cost)
    {
        for (std::size_t j = 0; j < cols_; ++j)
            at(m_, j) = allowed_[j] ? cost[j] : 0.0;
        at(m_, cols_) = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (removed(i))
                continue;
            double cb = cost[basis_[i]];
            if (cb == 0.0)
                continue;
            for (std::size_t j = 0; j <= cols_; ++j)
                at(m_, j) -= cb * at(i, j);
        }
    }

    void pivot(std::size_t row, std::size_t col)
    {
        double p = at(row, col);
        for (std::size_t j = 0; j <= cols_; ++j)
            at(row, j) /= p;
        at(row, col) = 1.0;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == row)
                continue;
            double f = at(i, col);
            if (f == 0.0)
                continue;
            for (std::size_t j = 0; j <= cols_; ++j)
                at(i, j) -= f * at(row, j);
            at(i, col) = 0.0;
        }
        basis_[row] = col;
    }

    Status iterate(std::size_t& iterations)
    {
        while (true) {
            if (iterations >= opt_.max_iterations)
                return Status::iteration_limit;

            std::size_t enter = cols_;
            double best = opt_.optimality_tol;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (allowed_[j] && at(m_, j) > best) {
                    best = at(m_, j);
                    enter = j;
                }
            }
            if (enter == cols_)
                return Status::optimal;

            std::size_t leave = choose_leaving(enter);
            if (leave == m_)
                return Status::unbounded;
            pivot(leave, enter);
            ++iterations;
        }
    }

    // Lexicographic ratio test: ties in rhs/a are broken on the rows of
    // B^-1 (the columns that formed the starting identity) scaled by 1/a.
    // No basis repeats, so degenerate LPs cannot cycle.
    std::size_t choose_leaving(std::size_t enter) const
    {
        std::size_t leave = m_;
        for (std::size_t i = 0; i < m_; ++i) {
            if (removed(i) || at(i, enter) <= opt_.pivot_tol)
                continue;
            if (leave == m_ || lex_less(i, leave, enter))
                leave = i;
        }
        return leave;
    }

    bool lex_less(std::size_t i, std::size_t k, std::size_t enter) const
    {
        double ai = at(i, enter), ak = at(k, enter);
        auto cmp = [&](std::size_t col) {
            double qi = (col == cols_ ? std::max(0.0, at(i, col)) : at(i, col)) / ai;
            double qk = (col == cols_ ? std::max(0.0, at(k, col)) : at(k, col)) / ak;
            double scale = std::max({1.0, std::abs(qi), std::abs(qk)});
            if (qi < qk - kLexTol * scale)
                return -1;
            if (qi > qk + kLexTol * scale)
                return 1;
            return 0;
        };
        if (int c = cmp(cols_))
            return c < 0;
        for (std::size_t col : identity_cols_)
            if (int c = cmp(col))
                return c < 0;
        // numerically identical rows: larger pivot is the stabler choice
        return ai > ak;
    }

    void drive_out_artificials()
    {
        for (std::size_t i = 0; i < m_; ++i) {
            if (removed(i) || basis_[i] < art_begin_)
                continue;
            std::size_t col = cols_;
            double best = 1e-9;
            for (std::size_t j = 0; j < art_begin_; ++j) {
                if (std::abs(at(i, j)) > best) {
                    best = std::abs(at(i, j));
                    col = j;
                }
            }
            if (col < cols_) {
                pivot(i, col);
            }
            else {
                // redundant equality
                for (std::size_t j = 0; j <= cols_; ++j)
                    at(i, j) = 0.0;
                basis_[i] = kRemoved;
            }
        }
    }

    static constexpr double kLexTol = 1e-11;
    static constexpr std::size_t kRemoved = std::numeric_limits<std::size_t>::max();

    Options opt_;
    std::size_t n_orig_;
    std::size_t m_ = 0;
    std::size_t art_begin_ = 0;
    std::size_t cols_ = 0;
    std::size_t width_ = 0;
    std::vector<double> t_;
    std::vector<std::size_t> basis_;
    std::vector<std::size_t> identity_cols_;
    std::vector<bool> allowed_;
};

}  // namespace

Solution maximize(const Problem& problem, const Options& options)
{
    for (double c : problem.objective())
        if (!std::isfinite(c))
            throw SolverError("objective coefficient is not finite");
    for (const auto& row : problem.constraints())
        for (double a : row.coefficients)
            if (!std::isfinite(a))
                throw SolverError("constraint coefficient is not finite");

    Tableau tableau(problem, options);
    return tableau.solve(problem.objective());
}

}  // namespace conecpt::lp
