#include "volterra/io.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace volterra {

namespace {

using nlohmann::json;

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

Complex complex_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw IoError("expected a [re, im] pair");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line, const char* column) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw IoError("line " + std::to_string(line) + ": cannot parse " + column + " value '" + s + "'");
    }
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string signals_to_csv(const Dataset& dataset) {
    std::string out = "t,x,y,mask\n";
    for (std::size_t k = 0; k < dataset.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double y = dataset.output_noisy(i);
        out += std::to_string(k) + ',' + format_double(dataset.input(i)) + ',' +
               (std::isfinite(y) ? format_double(y) : std::string{}) + ',' + (dataset.mask[k] ? "1" : "0") + '\n';
    }
    return out;
}

void save_signals(const std::filesystem::path& path, const Dataset& dataset) {
    write_file(path, signals_to_csv(dataset));
}

Dataset signals_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw IoError("line 1: missing header");
    ++line_no;
    const std::vector<std::string> header = split_fields(line);
    if (header != std::vector<std::string>{"t", "x", "y", "mask"}) {
        throw IoError("line 1: header must be 't,x,y,mask'");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<bool> mask;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::vector<std::string> f = split_fields(line);
        if (f.size() != 4) {
            throw IoError("line " + std::to_string(line_no) + ": expected 4 fields, found " + std::to_string(f.size()));
        }
        const double t = parse_double(f[0], line_no, "t");
        if (t != static_cast<double>(xs.size())) {
            throw IoError("line " + std::to_string(line_no) + ": sample index " + f[0] + " out of sequence");
        }
        bool observed = true;
        if (f[3] == "1" || f[3] == "true") {
            observed = true;
        } else if (f[3] == "0" || f[3] == "false") {
            observed = false;
        } else {
            throw IoError("line " + std::to_string(line_no) + ": mask must be 0 or 1");
        }
        xs.push_back(parse_double(f[1], line_no, "x"));
        if (f[2].empty()) {
            if (observed) throw IoError("line " + std::to_string(line_no) + ": missing y on an observed sample");
            ys.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
            ys.push_back(parse_double(f[2], line_no, "y"));
        }
        mask.push_back(observed);
    }
    if (xs.empty()) throw IoError("no samples in signal file");
    Dataset d;
    d.input = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    d.output_noisy = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
    d.mask = std::move(mask);
    return d;
}

Dataset load_signals(const std::filesystem::path& path) { return signals_from_csv(read_file(path)); }

json to_json(const AtomicModel& model) {
    json atoms = json::array();
    for (const auto& t : model.first_order) {
        atoms.push_back({{"kind", "first"},
                         {"poles", json::array({complex_json(t.atom.pole.value())})},
                         {"coeff", complex_json(t.coeff)},
                         {"scale", t.atom.scale}});
    }
    for (const auto& t : model.second_order) {
        atoms.push_back({{"kind", "second"},
                         {"poles", json::array({complex_json(t.atom.pole1.value()), complex_json(t.atom.pole2.value())})},
                         {"coeff", complex_json(t.coeff)},
                         {"scale", t.atom.scale}});
    }
    return {{"atoms", atoms}, {"h0", model.h0}};
}

AtomicModel model_from_json(const json& j) {
    AtomicModel m;
    m.h0 = value_or(j, "h0", 0.0);
    if (!j.contains("atoms")) return m;
    for (const json& a : j.at("atoms")) {
        const std::string kind = a.at("kind").get<std::string>();
        const json& poles = a.at("poles");
        const Complex coeff = complex_from(a.at("coeff"));
        const double scale = value_or(a, "scale", 1.0);
        if (kind == "first") {
            if (poles.size() != 1) throw IoError("first-order atom needs exactly one pole");
            m.first_order.push_back({{Pole(complex_from(poles.at(0))), scale}, coeff});
        } else if (kind == "second") {
            if (poles.size() != 2) throw IoError("second-order atom needs exactly two poles");
            m.second_order.push_back({{Pole(complex_from(poles.at(0))), Pole(complex_from(poles.at(1))), scale}, coeff});
        } else {
            throw IoError("unknown atom kind '" + kind + "'");
        }
    }
    return m;
}

json to_json(const PoleGrid& grid) {
    json poles = json::array();
    for (const Pole& p : grid.poles) poles.push_back(complex_json(p.value()));
    return {{"radial", grid.radial_counts},
            {"angular", grid.angular_counts},
            {"min_radius", grid.min_radius},
            {"max_radius", grid.max_radius},
            {"poles", poles}};
}

PoleGrid grid_from_json(const json& j) {
    PoleGrid g;
    g.radial_counts = value_or<std::size_t>(j, "radial", 0);
    g.angular_counts = value_or<std::size_t>(j, "angular", 0);
    g.min_radius = value_or(j, "min_radius", 0.0);
    g.max_radius = value_or(j, "max_radius", 0.0);
    for (const json& p : j.at("poles")) g.poles.emplace_back(complex_from(p));
    return g;
}

json to_json(const Metrics& m) {
    json matches = json::array();
    for (const PoleMatch& pm : m.pole_match_report) {
        matches.push_back(
            {{"true", complex_json(pm.true_pole)}, {"nearest", complex_json(pm.nearest)}, {"distance", pm.distance}});
    }
    return {{"output_rmse", m.output_rmse},         {"output_max_err", m.output_max_err},
            {"kernel_h1_rmse", m.kernel_h1_rmse},   {"kernel_h2_rmse", m.kernel_h2_rmse},
            {"cardinality", m.cardinality},         {"pole_match_report", matches}};
}

Metrics metrics_from_json(const json& j) {
    Metrics m;
    m.output_rmse = j.at("output_rmse").get<double>();
    m.output_max_err = j.at("output_max_err").get<double>();
    m.kernel_h1_rmse = j.at("kernel_h1_rmse").get<double>();
    m.kernel_h2_rmse = j.at("kernel_h2_rmse").get<double>();
    m.cardinality = j.at("cardinality").get<std::size_t>();
    for (const json& pm : value_or(j, "pole_match_report", json::array())) {
        m.pole_match_report.push_back(
            {complex_from(pm.at("true")), complex_from(pm.at("nearest")), pm.at("distance").get<double>()});
    }
    return m;
}

json to_json(const Report& r) {
    json j;
    j["solver"] = r.solver;
    j["config"] = r.config;
    if (r.grid) {
        json g = to_json(*r.grid);
        if (r.catalog) {
            g["policy"] = r.catalog->policy.name();
            g["pairs_count"] = r.catalog->second_atoms.size();
            g["scale_alpha"] = r.catalog->scale_alpha;
            g["scale_beta"] = r.catalog->scale_beta;
            g["seed"] = r.catalog->seed;
            g["first_order_atoms"] = r.catalog->first_atoms.size();
            json first = json::array();
            for (const auto& a : r.catalog->first_atoms) first.push_back(complex_json(a.pole.value()));
            json pairs = json::array();
            for (const auto& a : r.catalog->second_atoms) {
                pairs.push_back(json::array({complex_json(a.pole1.value()), complex_json(a.pole2.value())}));
            }
            g["first_order_poles"] = std::move(first);
            g["pairs"] = std::move(pairs);
        }
        j["grid"] = std::move(g);
    } else {
        j["grid"] = nullptr;
    }
    const json model = to_json(r.model);
    j["atoms"] = model.at("atoms");
    j["h0"] = model.at("h0");
    j["truth"] = r.truth ? to_json(*r.truth) : json(nullptr);
    j["metrics"] = r.metrics ? to_json(*r.metrics) : json(nullptr);
    j["trace"] = r.trace;
    j["seed"] = r.seed;
    j["memory"] = r.memory;
    j["cardinality"] = r.cardinality;
    j["residual_sq"] = r.residual_sq;
    j["converged"] = r.converged;
    j["eta_max"] = r.eta_max;
    j["epsilon"] = r.epsilon;
    j["tau"] = r.tau;
    j["lambda"] = r.lambda;
    return j;
}

Report report_from_json(const json& j) {
    Report r;
    try {
        r.solver = j.at("solver").get<std::string>();
        r.config = value_or(j, "config", json::object());
        if (j.contains("grid") && !j.at("grid").is_null()) {
            const json& g = j.at("grid");
            r.grid = grid_from_json(g);
            if (g.contains("policy")) {
                AtomCatalog c;
                c.policy = PairPolicy::parse(g.at("policy").get<std::string>(), value_or<std::size_t>(g, "pairs_count", 0));
                c.scale_alpha = value_or(g, "scale_alpha", 1.0);
                c.scale_beta = value_or(g, "scale_beta", 1.0);
                c.seed = value_or<std::uint64_t>(g, "seed", 0);
                if (g.contains("first_order_poles")) {
                    for (const json& p : g.at("first_order_poles")) {
                        c.first_atoms.push_back({Pole(complex_from(p)), c.scale_alpha});
                    }
                } else {
                    for (const Pole& p : r.grid->poles) c.first_atoms.push_back({p, c.scale_alpha});
                }
                for (const json& p : value_or(g, "pairs", json::array())) {
                    c.second_atoms.push_back({Pole(complex_from(p.at(0))), Pole(complex_from(p.at(1))), c.scale_beta});
                }
                r.catalog = std::move(c);
            }
        }
        r.model = model_from_json(j);
        if (j.contains("truth") && !j.at("truth").is_null()) r.truth = model_from_json(j.at("truth"));
        if (j.contains("metrics") && !j.at("metrics").is_null()) r.metrics = metrics_from_json(j.at("metrics"));
        r.trace = value_or(j, "trace", std::vector<double>{});
        r.seed = value_or<std::uint64_t>(j, "seed", 0);
        r.memory = value_or<std::size_t>(j, "memory", 0);
        r.cardinality = value_or<std::size_t>(j, "cardinality", 0);
        r.residual_sq = value_or(j, "residual_sq", 0.0);
        r.converged = value_or(j, "converged", false);
        r.eta_max = value_or(j, "eta_max", 0.0);
        r.epsilon = value_or(j, "epsilon", 0.0);
        r.tau = value_or(j, "tau", 0.0);
        r.lambda = value_or(j, "lambda", 0.0);
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed report: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string("invalid report content: ") + e.what());
    }
    return r;
}

void save_report(const std::filesystem::path& path, const Report& report) {
    write_file(path, to_json(report).dump(2) + "\n");
}

Report load_report(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
    return report_from_json(j);
}

}  // namespace volterra
