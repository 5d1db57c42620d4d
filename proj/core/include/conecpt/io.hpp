#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "conecpt/cone.hpp"
#include "conecpt/market.hpp"
#include "conecpt/optimizer.hpp"
#include "conecpt/strategy.hpp"

namespace conecpt::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Vectors and matrices as JSON arrays.
Json to_json(const Vector& v);
Vector vector_from_json(const Json& j, const char* what);
Matrix matrix_from_json(const Json& j, const char* what);

Json cone_to_json(const SolvencyCone& cone);
SolvencyCone cone_from_json(const Json& j);

Json bid_ask_to_json(const BidAskMatrix& pi);
BidAskMatrix bid_ask_from_json(const Json& j);

/// {"schema_version", "kind": "schedule", "endowment", "trades": {"<node>": [..]}}
Json schedule_to_json(const TradeSchedule& sched);
/// {"schema_version", "kind": "randomized", "endowment", "components": [{"weight", "trades"}]}
Json strategy_to_json(const RandomizedStrategy& strategy);
/// Accepts either document kind; a plain schedule becomes a one-component mixture.
/// Nodes absent from "trades" get a zero trade.
RandomizedStrategy strategy_from_json(const Json& j, const ScenarioTree& tree);

Json tree_to_json(const ScenarioTree& tree);
Json cps_to_json(const ConsistentPriceSystem& cps);

/// Shortest round-trip decimal text, independent of the C++ locale.
std::string format_number(double x);

/// Minimal CSV builder: comma separated, header row first.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& row();
    CsvWriter& cell(double x);
    CsvWriter& cell(std::size_t x);
    CsvWriter& cell(std::string_view s);
    // without this a string literal would pick the bool overload
    CsvWriter& cell(const char* s) { return cell(std::string_view(s)); }
    CsvWriter& cell(bool b);

    std::string str() const;

private:
    std::size_t columns_;
    std::string text_;
    std::size_t in_row_ = 0;
    bool open_ = false;
};

std::string trace_csv(const OptimizationTrace& trace);
std::string law_csv(const DiscreteDistribution& law);
std::string checks_csv(const std::vector<const CheckReport*>& reports);
std::string paths_csv(const PathBatch& paths, const std::vector<double>& grid);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace conecpt::io
