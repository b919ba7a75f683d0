#pragma once

// JSON documents for instances and loss schedules. Loaders re-validate every
// structural invariant.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "linmdp/env_suite.hpp"
#include "linmdp/mdp.hpp"

namespace linmdp {

using Json = nlohmann::json;

Json to_json(const Mat& m);
Mat mat_from_json(const Json& j);

Json mdp_to_json(const LinearMDP& mdp);
LinearMDP mdp_from_json(const Json& j);

Json schedule_to_json(const LossSchedule& schedule);
LossSchedule schedule_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace linmdp
