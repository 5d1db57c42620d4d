#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace conecpt::lp {

enum class Sense { less_equal, equal, greater_equal };

enum class Status { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(Status status);

/// Raised when the simplex cannot produce a verdict (iteration limit,
/// malformed problem). Infeasibility and unboundedness are *not* errors;
/// they are reported through Solution::status.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Constraint {
    std::vector<double> coefficients;
    Sense sense = Sense::less_equal;
    double rhs = 0.0;
};

/// maximize c.x  subject to  rows,  x >= 0.
/// Free variables must be split by the caller.
class Problem {
public:
    explicit Problem(std::size_t num_vars);

    std::size_t num_vars() const { return num_vars_; }
    std::size_t num_constraints() const { return rows_.size(); }

    void set_objective(std::vector<double> c);
    void set_objective_coefficient(std::size_t var, double value);
    void add_constraint(std::vector<double> coefficients, Sense sense, double rhs);

    const std::vector<double>& objective() const { return objective_; }
    const std::vector<Constraint>& constraints() const { return rows_; }

private:
    std::size_t num_vars_;
    std::vector<double> objective_;
    std::vector<Constraint> rows_;
};

struct Options {
    std::size_t max_iterations = 200000;
    double feasibility_tol = 1e-9;
    double pivot_tol = 1e-9;
    double optimality_tol = 1e-11;
};

struct Solution {
    Status status = Status::infeasible;
    double objective = 0.0;
    std::vector<double> x;
    std::size_t iterations = 0;
};

/// Two-phase dense tableau simplex. Dantzig pricing with a lexicographic
/// ratio test, so degenerate problems terminate.
Solution maximize(const Problem& problem, const Options& options = {});

}  // namespace conecpt::lp
