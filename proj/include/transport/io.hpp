#ifndef TRANSPORT_IO_HPP
#define TRANSPORT_IO_HPP

#include <string>
#include <vector>

#include "transport/duality.hpp"
#include "transport/generator.hpp"
#include "transport/model.hpp"

#include "json.hpp"

namespace transport {

using Json = nlohmann::json;

// Coordinate text format: "# states: N" header, then "row col value" lines.
std::string matrix_to_coordinate_text(const SparseGenerator& gen);

// CSV "state_index, eta_1..eta_L, probability".
std::string distribution_to_csv(const SparseGenerator& gen, const Eigen::VectorXd& pi);

// CSV "m, probability, std_error".
std::string absorption_to_csv(const AbsorptionTable& table);

Json spec_to_json(const ModelSpec& spec);

// One named check inside a verification report.
struct CheckResult {
    std::string name;
    Json inputs;
    double computed = 0.0;
    double reference = 0.0;
    double deviation = 0.0;
    bool pass = false;
};

Json report_to_json(const std::string& suite, const std::vector<CheckResult>& checks);

struct RunManifest {
    std::string command;
    Json resolved_config;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string version;
    std::string timestamp;
    std::vector<std::string> outputs;

    Json to_json() const;
    static RunManifest from_json(const Json& j);
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace transport

#endif
