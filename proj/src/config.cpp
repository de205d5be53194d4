#include "leqlab/config.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "leqlab/errors.hpp"

namespace leq {

namespace {

constexpr std::array<std::string_view, 11> coefficient_names = {
    "A1", "B1", "C1", "D1", "b", "sigma", "A2", "B2", "C2", "D2", "g"};
constexpr std::array<std::string_view, 4> scalar_names = {"horizon", "x0", "theta", "grid_n"};
constexpr std::array<std::string_view, 3> terminal_names = {"G", "S1", "S2"};
constexpr std::array<std::string_view, 3> mc_names = {"n_paths", "dt", "seed"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& names, std::string_view key)
{
    for (auto n : names) {
        if (n == key) {
            return true;
        }
    }
    return false;
}

bool is_weight(std::string_view key)
{
    for (const char* n : WeightMatrix::names) {
        if (key == n) {
            return true;
        }
    }
    return false;
}

bool known_block_field(std::string_view block, std::string_view key)
{
    if (block == "terminal") {
        return contains(terminal_names, key);
    }
    if (block == "weights") {
        return is_weight(key);
    }
    if (block == "mc") {
        return contains(mc_names, key);
    }
    return false;
}

bool known_top_level(std::string_view key)
{
    return contains(scalar_names, key) || contains(coefficient_names, key) || key == "terminal" ||
           key == "weights" || key == "mc";
}

double number(const nlohmann::json& j, const std::string& field)
{
    if (!j.is_number()) {
        throw ConfigParseError("field '" + field + "' must be a number");
    }
    return j.get<double>();
}

CoefficientFunction coefficient(const nlohmann::json& j, double horizon, const std::string& field)
{
    if (j.is_number()) {
        return CoefficientFunction::constant(j.get<double>());
    }
    if (j.is_array()) {
        std::vector<double> samples;
        for (const auto& v : j) {
            samples.push_back(number(v, field));
        }
        if (samples.size() < 2) {
            throw ConfigParseError("field '" + field + "' needs at least two samples");
        }
        return CoefficientFunction::piecewise(std::move(samples), horizon);
    }
    throw ConfigParseError("field '" + field + "' must be a number or a sample list");
}

nlohmann::json coefficient_json(const CoefficientFunction& f)
{
    if (f.is_constant()) {
        return f.samples()[0];
    }
    return std::vector<double>(f.samples().begin(), f.samples().end());
}

} // namespace

ConfigDocument parse_config(std::string_view text)
{
    ConfigDocument doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end(), nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigParseError(std::string("malformed config: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigParseError("config must be an object");
    }
    return doc;
}

ConfigDocument load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigParseError("config not found: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_override(ConfigDocument& doc, std::string_view key, std::string_view value)
{
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(value.begin(), value.end());
    } catch (const nlohmann::json::parse_error&) {
        throw ConfigParseError("override '" + std::string(key) + "' has an invalid value");
    }
    const auto dot = key.find('.');
    if (dot == std::string_view::npos) {
        if (!known_top_level(key) || key == "terminal" || key == "weights" || key == "mc") {
            throw ConfigParseError("unknown override '" + std::string(key) + "'");
        }
        doc[std::string(key)] = parsed;
        return;
    }
    const auto block = key.substr(0, dot);
    const auto field = key.substr(dot + 1);
    if (!known_block_field(block, field)) {
        throw ConfigParseError("unknown override '" + std::string(key) + "'");
    }
    doc[std::string(block)][std::string(field)] = parsed;
}

ProblemSpec build_problem(const ConfigDocument& doc)
{
    if (!doc.is_object()) {
        throw ConfigParseError("config must be an object");
    }
    for (const auto& [key, value] : doc.items()) {
        if (!known_top_level(key)) {
            throw ConfigParseError("unknown field '" + key + "'");
        }
        if (key == "terminal" || key == "weights" || key == "mc") {
            if (!value.is_object()) {
                throw ConfigParseError("field '" + key + "' must be an object");
            }
            for (const auto& [sub, unused] : value.items()) {
                if (!known_block_field(key, sub)) {
                    throw ConfigParseError("unknown field '" + key + "." + sub + "'");
                }
            }
        }
    }
    for (const char* required : {"horizon", "x0", "theta", "weights"}) {
        if (!doc.contains(required)) {
            throw ConfigParseError(std::string("missing required field '") + required + "'");
        }
    }
    if (!doc["weights"].contains("R44")) {
        throw ConfigParseError("missing required field 'weights.R44'");
    }

    ProblemSpec spec;
    spec.horizon = number(doc["horizon"], "horizon");
    if (!(spec.horizon > 0.0)) {
        throw ValidationError("horizon must be positive", "horizon");
    }
    spec.x0 = number(doc["x0"], "x0");
    spec.theta = number(doc["theta"], "theta");
    if (doc.contains("grid_n")) {
        const auto& j = doc["grid_n"];
        if (!j.is_number_integer()) {
            throw ConfigParseError("field 'grid_n' must be an integer");
        }
        spec.grid_n = j.get<int>();
    }

    CoefficientFunction* targets[] = {&spec.A1, &spec.B1, &spec.C1, &spec.D1,
                                      &spec.b,  &spec.sigma, &spec.A2, &spec.B2,
                                      &spec.C2, &spec.D2, &spec.g};
    for (std::size_t k = 0; k < coefficient_names.size(); ++k) {
        const std::string name(coefficient_names[k]);
        if (doc.contains(name)) {
            *targets[k] = coefficient(doc[name], spec.horizon, name);
        }
    }

    if (doc.contains("terminal")) {
        const auto& t = doc["terminal"];
        if (t.contains("G")) spec.G = number(t["G"], "terminal.G");
        if (t.contains("S1")) spec.S1 = number(t["S1"], "terminal.S1");
        if (t.contains("S2")) spec.S2 = number(t["S2"], "terminal.S2");
    }

    const auto& w = doc["weights"];
    for (std::size_t k = 0; k < WeightMatrix::names.size(); ++k) {
        const std::string name = WeightMatrix::names[k];
        if (w.contains(name)) {
            spec.R.stored(k) = coefficient(w[name], spec.horizon, "weights." + name);
        }
    }

    if (doc.contains("mc")) {
        const auto& m = doc["mc"];
        if (m.contains("n_paths")) {
            if (!m["n_paths"].is_number_integer()) {
                throw ConfigParseError("field 'mc.n_paths' must be an integer");
            }
            spec.mc.n_paths = m["n_paths"].get<std::int64_t>();
        }
        if (m.contains("dt")) spec.mc.dt = number(m["dt"], "mc.dt");
        if (m.contains("seed")) {
            if (!m["seed"].is_number_integer()) {
                throw ConfigParseError("field 'mc.seed' must be an integer");
            }
            spec.mc.seed = m["seed"].get<std::uint64_t>();
        }
    }

    validate(spec);
    return spec;
}

ConfigDocument to_config(const ProblemSpec& spec)
{
    ConfigDocument doc;
    doc["horizon"] = spec.horizon;
    doc["x0"] = spec.x0;
    doc["theta"] = spec.theta;
    doc["grid_n"] = spec.grid_n;
    const CoefficientFunction* sources[] = {&spec.A1, &spec.B1, &spec.C1, &spec.D1,
                                            &spec.b,  &spec.sigma, &spec.A2, &spec.B2,
                                            &spec.C2, &spec.D2, &spec.g};
    for (std::size_t k = 0; k < coefficient_names.size(); ++k) {
        doc[std::string(coefficient_names[k])] = coefficient_json(*sources[k]);
    }
    doc["terminal"] = {{"G", spec.G}, {"S1", spec.S1}, {"S2", spec.S2}};
    for (std::size_t k = 0; k < WeightMatrix::names.size(); ++k) {
        doc["weights"][WeightMatrix::names[k]] = coefficient_json(spec.R.stored(k));
    }
    doc["mc"] = {{"n_paths", spec.mc.n_paths}, {"dt", spec.mc_dt()}, {"seed", spec.mc.seed}};
    return doc;
}

} // namespace leq
