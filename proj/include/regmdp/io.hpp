#pragma once

// JSON and CSV serialization for the library types.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "regmdp/divergence.hpp"
#include "regmdp/mdp.hpp"
#include "regmdp/rairl.hpp"
#include "regmdp/regularizer.hpp"

namespace regmdp::io {

using nlohmann::json;

// Parsers reject unknown keys and wrong types with ParameterError, naming the
// offending path.
// Field helpers for hand-written parsers. `where` is the JSON path used in
// error messages; missing keys yield the fallback.
void require_object(const json& j, const std::string& where);
void reject_unknown(const json& j, const std::string& where,
                    std::initializer_list<const char*> allowed);
double get_number(const json& j, const std::string& key, const std::string& where,
                  double fallback);
std::uint64_t get_count(const json& j, const std::string& key, const std::string& where,
                        std::uint64_t fallback);
std::string get_string(const json& j, const std::string& key, const std::string& where,
                       const std::string& fallback);
std::vector<double> vector_from_json(const json& j, const std::string& where);

json to_json(const RegularizerSpec& spec);
RegularizerSpec regularizer_from_json(const json& j, const std::string& where = "reg");

json to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, const std::string& where);

json to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const json& j, const std::string& where = "mdp");

json to_json(const TabularPolicy& pi);
json to_json(const ValueSolution& sol);
json to_json(const RewardModel& model);
json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const json& j, const std::string& where = "train");

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

// CSV writers. Doubles are printed with 17 significant digits so files
// round-trip exactly and identical runs produce identical bytes.
std::string format_double(double v);
void write_policy_csv(std::ostream& os, const TabularPolicy& pi);
void write_reward_csv(std::ostream& os, const Matrix& reward);  // s,a,r
void write_heatmap_csv(std::ostream& os, const HeatmapGrid& grid);
void write_metrics_header(std::ostream& os, const std::vector<std::string>& probe_names);
void write_metrics_row(std::ostream& os, const MetricsRow& row);

}  // namespace regmdp::io
