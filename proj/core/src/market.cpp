#include "conecpt/market.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "conecpt/error.hpp"
#include "conecpt/linprog.hpp"
#include "conecpt/parallel.hpp"

namespace conecpt {

// ---------------------------------------------------------------------------
// DrivingProcessSpec

namespace {

void check_vector(const Vector& v, std::size_t m, const char* what)
{
    if (static_cast<std::size_t>(v.size()) != m)
        throw InvalidArgument(std::string("driving process: ") + what + " must have length m");
    if (!v.allFinite())
        throw InvalidArgument(std::string("driving process: ") + what + " is not finite");
}

}  // namespace

void DrivingProcessSpec::validate() const
{
    if (m == 0)
        throw InvalidArgument("driving process: m must be positive");
    // a lone {0} is the single-node market
    if (grid.empty() || grid.front() != 0.0 || (grid.size() > 1 && grid.back() != 1.0))
        throw InvalidArgument("driving process: grid must start at 0 and end at 1");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw InvalidArgument("driving process: grid must be strictly increasing");

    std::visit(
        [this](const auto& model) {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, FiniteIncrements>) {
                if (model.per_step.empty())
                    throw InvalidArgument("driving process: finite support list is empty");
                if (model.per_step.size() != 1 && model.per_step.size() != steps())
                    throw InvalidArgument("driving process: need one support list or one per step");
                for (const auto& support : model.per_step) {
                    if (support.empty())
                        throw InvalidArgument("driving process: empty increment support");
                    double total = 0.0;
                    for (const auto& pt : support) {
                        check_vector(pt.value, m, "increment value");
                        if (!(pt.probability > 0.0) || !std::isfinite(pt.probability))
                            throw InvalidArgument("driving process: support probabilities must be > 0");
                        total += pt.probability;
                    }
                    if (std::abs(total - 1.0) > 1e-12)
                        throw InvalidArgument("driving process: support probabilities must sum to 1");
                }
            }
            else {
                check_vector(model.drift, m, "drift");
                check_vector(model.volatility, m, "volatility");
                if ((model.volatility.array() < 0.0).any())
                    throw InvalidArgument("driving process: volatility must be >= 0");
                if constexpr (std::is_same_v<T, JumpDiffusionIncrements>) {
                    if (!(model.jump_intensity >= 0.0) || !std::isfinite(model.jump_intensity))
                        throw InvalidArgument("driving process: jump intensity must be >= 0");
                    check_vector(model.jump_mean, m, "jump mean");
                    check_vector(model.jump_stddev, m, "jump stddev");
                    if ((model.jump_stddev.array() < 0.0).any())
                        throw InvalidArgument("driving process: jump stddev must be >= 0");
                }
            }
        },
        increments);
}

Vector PathBatch::point(std::size_t p, std::size_t step) const
{
    Vector v(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k)
        v[static_cast<Eigen::Index>(k)] = at(p, step, k);
    return v;
}

std::vector<Vector> PathBatch::path(std::size_t p) const
{
    std::vector<Vector> out;
    out.reserve(points);
    for (std::size_t s = 0; s < points; ++s)
        out.push_back(point(p, s));
    return out;
}

namespace {

std::mt19937_64 block_engine(std::uint64_t seed, std::uint64_t block)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

PathBatch sample_paths(const DrivingProcessSpec& spec, std::size_t n_paths, std::size_t threads)
{
    spec.validate();
    if (n_paths == 0)
        throw InvalidArgument("sample_paths: n_paths must be positive");

    PathBatch batch;
    batch.n_paths = n_paths;
    batch.points = spec.steps() + 1;
    batch.m = spec.m;
    batch.values.assign(n_paths * batch.points * batch.m, 0.0);

    const std::size_t blocks = (n_paths + kPathBlock - 1) / kPathBlock;
    const std::size_t m = spec.m;

    parallel_for(blocks, threads, [&](std::size_t block) {
        auto rng = block_engine(spec.seed, block);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        const std::size_t begin = block * kPathBlock;
        const std::size_t end = std::min(n_paths, begin + kPathBlock);

        for (std::size_t p = begin; p < end; ++p) {
            double* row = &batch.values[p * batch.points * m];
            for (std::size_t s = 0; s < spec.steps(); ++s) {
                const double dt = spec.grid[s + 1] - spec.grid[s];
                const double* prev = row + s * m;
                double* next = row + (s + 1) * m;
                std::visit(
                    [&](const auto& model) {
                        using T = std::decay_t<decltype(model)>;
                        if constexpr (std::is_same_v<T, FiniteIncrements>) {
                            const auto& support = model.at(s);
                            double u = uniform(rng);
                            std::size_t pick = support.size() - 1;
                            double acc = 0.0;
                            for (std::size_t k = 0; k < support.size(); ++k) {
                                acc += support[k].probability;
                                if (u < acc) {
                                    pick = k;
                                    break;
                                }
                            }
                            for (std::size_t k = 0; k < m; ++k)
                                next[k] = prev[k] + support[pick].value[static_cast<Eigen::Index>(k)];
                        }
                        else {
                            const double sq = std::sqrt(dt);
                            for (std::size_t k = 0; k < m; ++k) {
                                const auto kk = static_cast<Eigen::Index>(k);
                                next[k] = prev[k] + model.drift[kk] * dt + model.volatility[kk] * sq * normal(rng);
                            }
                            if constexpr (std::is_same_v<T, JumpDiffusionIncrements>) {
                                if (model.jump_intensity > 0.0) {
                                    std::poisson_distribution<int> jumps(model.jump_intensity * dt);
                                    int count = jumps(rng);
                                    for (int j = 0; j < count; ++j)
                                        for (std::size_t k = 0; k < m; ++k) {
                                            const auto kk = static_cast<Eigen::Index>(k);
                                            next[k] += model.jump_mean[kk] + model.jump_stddev[kk] * normal(rng);
                                        }
                                }
                            }
                        }
                    },
                    spec.increments);
            }
        }
    });
    return batch;
}

// ---------------------------------------------------------------------------
// ConeMap

namespace {

Vector proportional_prices(const ProportionalConeParams& p, const Vector& y)
{
    Vector prices(static_cast<Eigen::Index>(p.d));
    prices[0] = 1.0;
    for (std::size_t j = 1; j < p.d; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double base = p.initial_prices[jj - 1];
        if (p.price_model == PriceModel::constant) {
            prices[jj] = base;
            continue;
        }
        if (y.size() < jj)
            throw InvalidArgument("cone map: price model needs m >= d - 1");
        prices[jj] = p.price_model == PriceModel::linear ? base + y[jj - 1] : base * std::exp(y[jj - 1]);
        if (!(prices[jj] > 0.0))
            throw InvalidArgument("cone map: price of asset " + std::to_string(j + 1) + " is not positive");
    }
    return prices;
}

}  // namespace

ConeMap ConeMap::proportional(ProportionalConeParams params)
{
    if (params.d == 0)
        throw InvalidArgument("cone map: d must be positive");
    if (static_cast<std::size_t>(params.initial_prices.size()) + 1 != params.d)
        throw InvalidArgument("cone map: need d - 1 initial risky prices");
    if (!(params.lambda >= 0.0) || !std::isfinite(params.lambda) || !std::isfinite(params.lambda_slope))
        throw InvalidArgument("cone map: lambda must be finite and >= 0");
    if ((params.initial_prices.array() <= 0.0).any())
        throw InvalidArgument("cone map: initial prices must be > 0");

    ConeMap map;
    map.d_ = params.d;
    map.params_ = std::make_shared<const ProportionalConeParams>(std::move(params));
    auto p = map.params_;
    map.fn_ = [p](double, const Vector& y) {
        double lambda = p->lambda + p->lambda_slope * y.norm();
        if (lambda < 0.0)
            throw InvalidArgument("cone map: lambda(Y) is negative");
        return BidAskMatrix::proportional(proportional_prices(*p, y), lambda);
    };
    return map;
}

ConeMap ConeMap::custom(std::size_t d, Fn fn)
{
    if (!fn)
        throw InvalidArgument("cone map: empty function");
    ConeMap map;
    map.d_ = d;
    map.fn_ = std::move(fn);
    return map;
}

Vector ConeMap::prices(const Vector& y) const
{
    return params_ ? proportional_prices(*params_, y) : Vector{};
}

// ---------------------------------------------------------------------------
// ScenarioTree

namespace {

struct ConeCache {
    const ConeMap& map;
    std::map<std::vector<double>, std::shared_ptr<const SolvencyCone>> cache;

    std::shared_ptr<const SolvencyCone> get(double time, const Vector& y)
    {
        BidAskMatrix pi = map(time, y);
        if (pi.dim() != map.dim())
            throw InvalidArgument("cone map returned a matrix of the wrong dimension");
        std::vector<double> key(pi.rates().data(), pi.rates().data() + pi.rates().size());
        auto it = cache.find(key);
        if (it != cache.end())
            return it->second;
        auto cone = std::make_shared<const SolvencyCone>(SolvencyCone::from_bid_ask(pi));
        cache.emplace(std::move(key), cone);
        return cone;
    }
};

}  // namespace

ScenarioTree ScenarioTree::build(const DrivingProcessSpec& spec, const ConeMap& cones, const ReferenceMap& reference,
                                 std::size_t max_leaves)
{
    spec.validate();
    if (!spec.finite_support())
        throw InvalidArgument("build_tree: finite-support increments required");
    const auto& inc = std::get<FiniteIncrements>(spec.increments);

    double leaf_count = 1.0;
    for (std::size_t s = 0; s < spec.steps(); ++s)
        leaf_count *= static_cast<double>(inc.at(s).size());
    if (leaf_count > static_cast<double>(max_leaves))
        throw CapExceeded("build_tree: " + std::to_string(static_cast<long long>(leaf_count)) +
                              " leaves exceed the cap of " + std::to_string(max_leaves),
                          leaf_count);

    ScenarioTree tree;
    tree.d_ = cones.dim();
    tree.m_ = spec.m;
    tree.steps_ = spec.steps();

    TreeNode root;
    root.y = Vector::Zero(static_cast<Eigen::Index>(spec.m));
    tree.nodes_.push_back(root);

    // Breadth-first expansion: ids of one level are contiguous.
    std::size_t level_begin = 0;
    for (std::size_t s = 0; s < spec.steps(); ++s) {
        const std::size_t level_end = tree.nodes_.size();
        const auto& support = inc.at(s);
        for (std::size_t parent = level_begin; parent < level_end; ++parent) {
            for (const auto& pt : support) {
                TreeNode child;
                child.id = tree.nodes_.size();
                child.parent = parent;
                child.step = s + 1;
                child.time = spec.grid[s + 1];
                child.y = tree.nodes_[parent].y + pt.value;
                child.transition_probability = pt.probability;
                child.probability = tree.nodes_[parent].probability * pt.probability;
                tree.nodes_[parent].children.push_back(child.id);
                tree.nodes_.push_back(std::move(child));
            }
        }
        level_begin = level_end;
    }
    tree.finalize(cones, reference);
    return tree;
}

ScenarioTree ScenarioTree::from_paths(const PathBatch& paths, const std::vector<double>& grid, const ConeMap& cones,
                                      const ReferenceMap& reference)
{
    if (paths.n_paths == 0 || paths.points == 0)
        throw InvalidArgument("from_paths: empty batch");
    if (grid.size() != paths.points)
        throw InvalidArgument("from_paths: grid does not match path length");

    // Trie of shared prefixes, then breadth-first renumbering.
    struct Proto {
        std::size_t parent;
        std::size_t step;
        Vector y;
        std::size_t count = 0;
        std::vector<std::size_t> children;
    };
    std::vector<Proto> proto;
    proto.push_back({kNoParent, 0, paths.point(0, 0), paths.n_paths, {}});
    for (std::size_t p = 0; p < paths.n_paths; ++p) {
        if (paths.point(p, 0).norm() != 0.0)
            throw InvalidArgument("from_paths: paths must start at 0");
        std::size_t cur = 0;
        for (std::size_t s = 1; s < paths.points; ++s) {
            Vector y = paths.point(p, s);
            std::size_t found = kNoParent;
            for (auto c : proto[cur].children)
                if (proto[c].y == y)
                    found = c;
            if (found == kNoParent) {
                found = proto.size();
                proto.push_back({cur, s, y, 0, {}});
                proto[cur].children.push_back(found);
            }
            ++proto[found].count;
            cur = found;
        }
    }

    ScenarioTree tree;
    tree.d_ = cones.dim();
    tree.m_ = paths.m;
    tree.steps_ = paths.points - 1;

    std::vector<std::size_t> order{0};
    std::vector<std::size_t> new_id(proto.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        for (auto c : proto[order[i]].children)
            order.push_back(c);
    for (std::size_t i = 0; i < order.size(); ++i)
        new_id[order[i]] = i;

    const double n = static_cast<double>(paths.n_paths);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Proto& src = proto[order[i]];
        TreeNode node;
        node.id = i;
        node.parent = src.parent == kNoParent ? kNoParent : new_id[src.parent];
        node.step = src.step;
        node.time = grid[src.step];
        node.y = src.y;
        node.probability = static_cast<double>(src.count) / n;
        node.transition_probability =
            src.parent == kNoParent ? 1.0 : static_cast<double>(src.count) / static_cast<double>(proto[src.parent].count);
        for (auto c : src.children)
            node.children.push_back(new_id[c]);
        tree.nodes_.push_back(std::move(node));
    }
    tree.finalize(cones, reference);
    return tree;
}

void ScenarioTree::finalize(const ConeMap& cones, const ReferenceMap& reference)
{
    reference.validate(d_, m_);
    ConeCache cache{cones, {}};
    leaves_.clear();
    internal_.clear();
    for (auto& node : nodes_) {
        node.cone = cache.get(node.time, node.y);
        if (node.is_leaf()) {
            node.reference = reference.evaluate(y_path(node.id));
            leaves_.push_back(node.id);
        }
        else {
            internal_.push_back(node.id);
        }
    }
}

std::vector<std::size_t> ScenarioTree::lineage(std::size_t id) const
{
    std::vector<std::size_t> out;
    for (std::size_t cur = id; cur != kNoParent; cur = nodes_.at(cur).parent)
        out.push_back(cur);
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<Vector> ScenarioTree::y_path(std::size_t id) const
{
    std::vector<Vector> out;
    for (auto n : lineage(id))
        out.push_back(nodes_[n].y);
    return out;
}

// ---------------------------------------------------------------------------
// Consistent price systems

bool ConsistentPriceSystem::verify(const ScenarioTree& tree, double tol) const
{
    if (z.size() != tree.size() || !(margin > 0.0))
        return false;
    for (const auto& node : tree.nodes()) {
        const Vector& zn = z[node.id];
        if (static_cast<std::size_t>(zn.size()) != tree.d())
            return false;
        for (const auto& g : node.cone->primal_generators())
            if (zn.dot(g) < margin * g.norm() - tol)
                return false;
        if (!node.is_leaf()) {
            Vector expect = Vector::Zero(zn.size());
            for (auto c : node.children)
                expect += tree.node(c).transition_probability * z[c];
            if ((expect - zn).cwiseAbs().maxCoeff() > tol)
                return false;
        }
    }
    return true;
}

CpsResult find_cps(const ScenarioTree& tree, double tol, std::size_t max_variables)
{
    const std::size_t d = tree.d();
    const std::size_t nodes = tree.size();
    const std::size_t nvar = nodes * d + 1;
    if (nvar > max_variables)
        throw CapExceeded("find_cps: " + std::to_string(nvar) + " LP variables exceed the cap of " +
                              std::to_string(max_variables),
                          static_cast<double>(nvar));
    const std::size_t eps = nodes * d;
    auto var = [d](std::size_t node, std::size_t i) { return node * d + i; };

    lp::Problem prob(nvar);
    prob.set_objective_coefficient(eps, 1.0);

    for (const auto& node : tree.nodes()) {
        for (const auto& g : node.cone->primal_generators()) {
            std::vector<double> row(nvar, 0.0);
            for (std::size_t i = 0; i < d; ++i)
                row[var(node.id, i)] = g[static_cast<Eigen::Index>(i)];
            row[eps] = -g.norm();
            prob.add_constraint(std::move(row), lp::Sense::greater_equal, 0.0);
        }
        if (node.is_leaf())
            continue;
        for (std::size_t i = 0; i < d; ++i) {
            std::vector<double> row(nvar, 0.0);
            row[var(node.id, i)] = 1.0;
            for (auto c : node.children)
                row[var(c, i)] -= tree.node(c).transition_probability;
            prob.add_constraint(std::move(row), lp::Sense::equal, 0.0);
        }
    }
    {
        std::vector<double> row(nvar, 0.0);
        for (std::size_t i = 0; i < d; ++i)
            row[var(0, i)] = 1.0;
        prob.add_constraint(std::move(row), lp::Sense::equal, 1.0);
    }

    auto sol = lp::maximize(prob);
    CpsResult result;
    if (sol.status == lp::Status::infeasible) {
        result.detail = "no martingale fits inside the dual cones";
        return result;
    }
    if (sol.status != lp::Status::optimal)
        throw LpFailure(std::string("find_cps: LP ") + lp::to_string(sol.status));

    result.cps.margin = sol.x[eps];
    result.cps.z.resize(nodes);
    for (std::size_t n = 0; n < nodes; ++n) {
        Vector zn(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i)
            zn[static_cast<Eigen::Index>(i)] = sol.x[var(n, i)];
        result.cps.z[n] = std::move(zn);
    }
    if (result.cps.margin > tol) {
        result.feasible = true;
        result.detail = "strictly consistent price system found";
    }
    else {
        result.detail = "martingale exists only on the boundary of the dual cones (margin " +
                        std::to_string(result.cps.margin) + ")";
    }
    return result;
}

}  // namespace conecpt
