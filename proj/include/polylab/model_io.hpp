#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>

#include "polylab/ensembles.hpp"

namespace polylab {

using json = nlohmann::json;

inline constexpr const char* kModelSchema = "polylab/model/v1";

// Reals are written as C99 hex floats ("0x1.8p+1"); readers accept those,
// decimal strings and plain JSON numbers.
std::string hexfloat(double x);
double read_real(const json& j, const std::string& ptr);

// Field access that reports the JSON pointer of a missing or malformed value.
const json& field(const json& j, const std::string& key, const std::string& ptr);
double real_field(const json& j, const std::string& key, const std::string& ptr);
std::vector<double> real_list(const json& j, const std::string& key, const std::string& ptr);
int int_field(const json& j, const std::string& key, const std::string& ptr);

json to_json(const Map1D& m);
Map1D map_from_json(const json& j, const std::string& ptr = "");

json to_json(const Poly& p);
Poly poly_from_json(const json& j, const std::string& ptr = "");

json to_json(const SaddleNodeUnfolding& u);
SaddleNodeUnfolding unfolding_from_json(const json& j, const std::string& ptr = "");

json to_json(const GlassesModel& g);
json to_json(const WGModel& w);
json to_json(const LEGModel& m);
GlassesModel glasses_from_json(const json& j, const std::string& ptr = "");
WGModel wg_from_json(const json& j, const std::string& ptr = "");
LEGModel leg_from_json(const json& j, const std::string& ptr = "");

// {"schema": ..., "kind": "glasses" | "wg" | "leg" | "saddle-node" | "family" | "assembly", "model": {...}}
json model_document(const std::string& kind, const json& model);
struct ModelDocument {
    std::string kind;
    json model;
};
ModelDocument parse_model_document(const json& doc);
json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

std::uint64_t fnv1a(const std::string& s);

}  // namespace polylab
