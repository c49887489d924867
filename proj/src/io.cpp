#include "transport/io.hpp"

#include <fstream>
#include <sstream>

namespace transport {

std::string matrix_to_coordinate_text(const SparseGenerator& gen) {
    std::ostringstream out;
    out.precision(17);
    out << "# states: " << gen.space.size() << "\n";
    for (int r = 0; r < gen.rates.outerSize(); ++r)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gen.rates, r); it;
             ++it)
            out << it.row() << " " << it.col() << " " << it.value() << "\n";
    return out.str();
}

std::string distribution_to_csv(const SparseGenerator& gen, const Eigen::VectorXd& pi) {
    std::ostringstream out;
    out.precision(17);
    out << "state_index";
    for (int i = 1; i <= gen.space.sites(); ++i) out << ",eta_" << i;
    out << ",probability\n";
    for (std::size_t s = 0; s < gen.space.size(); ++s) {
        out << s;
        for (const int n : gen.space.decode(s)) out << "," << n;
        out << "," << pi[static_cast<Eigen::Index>(s)] << "\n";
    }
    return out.str();
}

std::string absorption_to_csv(const AbsorptionTable& table) {
    std::ostringstream out;
    out.precision(17);
    out << "m,probability,std_error\n";
    for (std::size_t m = 0; m < table.probability.size(); ++m)
        out << m << "," << table.probability[m] << "," << table.std_error[m] << "\n";
    return out.str();
}

Json spec_to_json(const ModelSpec& spec) {
    Json j;
    j["family"] = family_name(spec.family);
    j["L"] = spec.L;
    if (has_shape(spec.family)) j["shape"] = spec.shape;
    if (const auto* r = std::get_if<BoundaryRates>(&spec.boundary)) {
        j["alpha"] = r->alpha;
        j["gamma"] = r->gamma;
        j["delta"] = r->delta;
        j["beta"] = r->beta;
    } else if (const auto* t = std::get_if<BoundaryTemperatures>(&spec.boundary)) {
        j["T_a"] = t->Ta;
        j["T_b"] = t->Tb;
    } else {
        j["boundary"] = "none";
    }
    return j;
}

Json report_to_json(const std::string& suite, const std::vector<CheckResult>& checks) {
    Json j;
    j["suite"] = suite;
    bool all = true;
    Json arr = Json::array();
    for (const auto& c : checks) {
        Json e;
        e["name"] = c.name;
        e["inputs"] = c.inputs;
        e["computed"] = c.computed;
        e["reference"] = c.reference;
        e["deviation"] = c.deviation;
        e["verdict"] = c.pass ? "pass" : "fail";
        arr.push_back(e);
        all = all && c.pass;
    }
    j["checks"] = arr;
    j["pass"] = all;
    return j;
}

Json RunManifest::to_json() const {
    Json j;
    j["command"] = command;
    j["config"] = resolved_config;
    j["seed"] = seed;
    j["threads"] = threads;
    j["version"] = version;
    j["timestamp"] = timestamp;
    j["outputs"] = outputs;
    return j;
}

RunManifest RunManifest::from_json(const Json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.resolved_config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.threads = j.at("threads").get<int>();
    m.version = j.value("version", "");
    m.timestamp = j.value("timestamp", "");
    m.outputs = j.value("outputs", std::vector<std::string>{});
    return m;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace transport
