#include "conecpt/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "conecpt/error.hpp"

namespace conecpt::io {

Json to_json(const Vector& v)
{
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back(v[i]);
    return arr;
}

Vector vector_from_json(const Json& j, const char* what)
{
    if (!j.is_array())
        throw InvalidArgument(std::string(what) + ": expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw InvalidArgument(std::string(what) + ": expected an array of numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Matrix matrix_from_json(const Json& j, const char* what)
{
    if (!j.is_array() || j.empty())
        throw InvalidArgument(std::string(what) + ": expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Vector first = vector_from_json(j[0], what);
    Matrix m(rows, first.size());
    for (Eigen::Index r = 0; r < rows; ++r) {
        Vector row = vector_from_json(j[static_cast<std::size_t>(r)], what);
        if (row.size() != first.size())
            throw InvalidArgument(std::string(what) + ": ragged rows");
        m.row(r) = row.transpose();
    }
    return m;
}

namespace {

Json vectors_to_json(const std::vector<Vector>& vs)
{
    Json arr = Json::array();
    for (const auto& v : vs)
        arr.push_back(to_json(v));
    return arr;
}

std::vector<Vector> vectors_from_json(const Json& j, const char* what)
{
    if (!j.is_array())
        throw InvalidArgument(std::string(what) + ": expected an array");
    std::vector<Vector> out;
    for (const auto& e : j)
        out.push_back(vector_from_json(e, what));
    return out;
}

const Json& require(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key))
        throw InvalidArgument(std::string("missing field '") + key + "'");
    return j.at(key);
}

Json trades_to_json(const TradeSchedule& sched)
{
    Json trades = Json::object();
    for (std::size_t n = 0; n < sched.size(); ++n)
        trades[std::to_string(n)] = to_json(sched.trade(n));
    return trades;
}

TradeSchedule trades_from_json(const Json& j, const Vector& endowment, const ScenarioTree& tree)
{
    if (!j.is_object())
        throw InvalidArgument("trades: expected an object mapping node id to trade vector");
    TradeSchedule sched = TradeSchedule::zero(tree, endowment);
    for (const auto& [key, value] : j.items()) {
        std::size_t node = 0;
        auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), node);
        if (ec != std::errc{} || ptr != key.data() + key.size() || node >= tree.size())
            throw InvalidArgument("trades: invalid node id '" + key + "'");
        Vector t = vector_from_json(value, "trade");
        if (static_cast<std::size_t>(t.size()) != tree.d())
            throw InvalidArgument("trades: node " + key + " has the wrong dimension");
        sched.trade(node) = t;
    }
    return sched;
}

}  // namespace

Json cone_to_json(const SolvencyCone& cone)
{
    return Json{{"dim", cone.dim()},
                {"primal_generators", vectors_to_json(cone.primal_generators())},
                {"dual_generators", vectors_to_json(cone.dual_generators())}};
}

SolvencyCone cone_from_json(const Json& j)
{
    auto dim = require(j, "dim").get<std::size_t>();
    auto primal = vectors_from_json(require(j, "primal_generators"), "primal_generators");
    for (const auto& g : primal)
        if (static_cast<std::size_t>(g.size()) != dim)
            throw InvalidArgument("cone: generator dimension does not match 'dim'");
    if (j.contains("dual_generators"))
        return SolvencyCone::from_parts(std::move(primal), vectors_from_json(j.at("dual_generators"), "dual_generators"));
    return SolvencyCone::from_generators(std::move(primal));
}

Json bid_ask_to_json(const BidAskMatrix& pi)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < pi.rates().rows(); ++i)
        rows.push_back(to_json(pi.rates().row(i).transpose()));
    return Json{{"dim", pi.dim()}, {"rates", rows}};
}

BidAskMatrix bid_ask_from_json(const Json& j)
{
    Matrix m = matrix_from_json(require(j, "rates"), "rates");
    if (j.contains("dim") && j.at("dim").get<std::size_t>() != static_cast<std::size_t>(m.rows()))
        throw InvalidArgument("bid-ask: 'dim' does not match the matrix");
    return BidAskMatrix(std::move(m));
}

Json schedule_to_json(const TradeSchedule& sched)
{
    return Json{{"schema_version", kSchemaVersion},
                {"kind", "schedule"},
                {"endowment", to_json(sched.endowment())},
                {"trades", trades_to_json(sched)}};
}

Json strategy_to_json(const RandomizedStrategy& strategy)
{
    strategy.validate();
    if (strategy.components.size() == 1)
        return schedule_to_json(strategy.components.front());
    Json comps = Json::array();
    for (std::size_t i = 0; i < strategy.components.size(); ++i)
        comps.push_back(Json{{"weight", strategy.weights[i]}, {"trades", trades_to_json(strategy.components[i])}});
    return Json{{"schema_version", kSchemaVersion},
                {"kind", "randomized"},
                {"endowment", to_json(strategy.components.front().endowment())},
                {"components", comps}};
}

RandomizedStrategy strategy_from_json(const Json& j, const ScenarioTree& tree)
{
    const auto version = require(j, "schema_version").get<int>();
    if (version != kSchemaVersion)
        throw InvalidArgument("strategy: unsupported schema_version " + std::to_string(version));
    const auto kind = require(j, "kind").get<std::string>();
    Vector x = vector_from_json(require(j, "endowment"), "endowment");
    if (static_cast<std::size_t>(x.size()) != tree.d())
        throw InvalidArgument("strategy: endowment dimension does not match the market");

    if (kind == "schedule")
        return RandomizedStrategy::pure(trades_from_json(require(j, "trades"), x, tree));
    if (kind != "randomized")
        throw InvalidArgument("strategy: unknown kind '" + kind + "'");

    RandomizedStrategy out;
    for (const auto& c : require(j, "components")) {
        out.weights.push_back(require(c, "weight").get<double>());
        out.components.push_back(trades_from_json(require(c, "trades"), x, tree));
    }
    out.validate();
    return out;
}

Json tree_to_json(const ScenarioTree& tree)
{
    Json nodes = Json::array();
    for (const auto& n : tree.nodes()) {
        Json node{{"id", n.id},
                  {"parent", n.parent == kNoParent ? Json(nullptr) : Json(n.parent)},
                  {"step", n.step},
                  {"time", n.time},
                  {"y", to_json(n.y)},
                  {"probability", n.probability},
                  {"transition_probability", n.transition_probability},
                  {"children", n.children},
                  {"cone", cone_to_json(*n.cone)}};
        if (n.is_leaf())
            node["reference"] = to_json(n.reference);
        nodes.push_back(std::move(node));
    }
    return Json{{"schema_version", kSchemaVersion},
                {"d", tree.d()},
                {"m", tree.m()},
                {"steps", tree.steps()},
                {"nodes", nodes}};
}

Json cps_to_json(const ConsistentPriceSystem& cps)
{
    Json z = Json::object();
    for (std::size_t n = 0; n < cps.z.size(); ++n)
        z[std::to_string(n)] = to_json(cps.z[n]);
    return Json{{"schema_version", kSchemaVersion}, {"kind", "consistent_price_system"}, {"margin", cps.margin}, {"z", z}};
}

std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{})
        throw Error("format_number: conversion failed");
    return std::string(buf.data(), ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size())
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i)
            text_ += ',';
        text_ += header[i];
    }
    text_ += '\n';
}

CsvWriter& CsvWriter::row()
{
    if (open_ && in_row_ != columns_)
        throw Error("csv: row has the wrong number of cells");
    if (open_)
        text_ += '\n';
    open_ = true;
    in_row_ = 0;
    return *this;
}

CsvWriter& CsvWriter::cell(std::string_view s)
{
    if (!open_)
        throw Error("csv: cell outside a row");
    if (in_row_++)
        text_ += ',';
    text_ += s;
    return *this;
}

CsvWriter& CsvWriter::cell(double x) { return cell(std::string_view(format_number(x))); }
CsvWriter& CsvWriter::cell(std::size_t x) { return cell(std::string_view(std::to_string(x))); }
CsvWriter& CsvWriter::cell(bool b) { return cell(std::string_view(b ? "pass" : "fail")); }

std::string CsvWriter::str() const
{
    if (open_ && in_row_ != columns_)
        throw Error("csv: last row has the wrong number of cells");
    return open_ ? text_ + '\n' : text_;
}

std::string trace_csv(const OptimizationTrace& trace)
{
    CsvWriter csv({"iteration", "best_V", "incumbent_TV", "evals"});
    for (const auto& r : trace.rows)
        csv.row().cell(r.iteration).cell(r.best_value).cell(r.incumbent_tv).cell(r.evaluations);
    return csv.str();
}

std::string law_csv(const DiscreteDistribution& law)
{
    CsvWriter csv({"outcome", "probability"});
    for (std::size_t i = 0; i < law.size(); ++i)
        csv.row().cell(law.outcomes()[i]).cell(law.probabilities()[i]);
    return csv.str();
}

std::string checks_csv(const std::vector<const CheckReport*>& reports)
{
    CsvWriter csv({"node", "check", "margin", "result"});
    for (const auto* rep : reports)
        for (const auto& r : rep->rows)
            csv.row().cell(r.node).cell(std::string_view(r.check)).cell(r.margin).cell(r.pass);
    return csv.str();
}

std::string paths_csv(const PathBatch& paths, const std::vector<double>& grid)
{
    std::vector<std::string> header{"path", "step", "time"};
    for (std::size_t k = 0; k < paths.m; ++k)
        header.push_back("y" + std::to_string(k + 1));
    CsvWriter csv(std::move(header));
    for (std::size_t p = 0; p < paths.n_paths; ++p) {
        for (std::size_t s = 0; s < paths.points; ++s) {
            csv.row().cell(p).cell(s).cell(grid.at(s));
            for (std::size_t k = 0; k < paths.m; ++k)
                csv.cell(paths.at(p, s, k));
        }
    }
    return csv.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out)
            throw Error("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidArgument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace conecpt::io
