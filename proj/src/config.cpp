#include "fireflow/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fireflow {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<double> parse_numbers(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const std::string& tok : split(s, ',')) {
        const std::string t = trim(tok);
        if (t.empty()) throw std::invalid_argument(what + ": empty number in '" + s + "'");
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(t, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument(what + ": bad number '" + t + "'");
        }
        if (pos != t.size()) throw std::invalid_argument(what + ": bad number '" + t + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string KeyValueConfig::dump() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

GaussianMixture parse_mixture(const std::string& text) {
    std::vector<GaussianComponent> comps;
    for (const std::string& part : split(text, ';')) {
        const std::string comp = trim(part);
        if (comp.empty()) continue;
        const std::vector<std::string> fields = split(comp, '@');
        if (fields.size() < 2 || fields.size() > 3) {
            throw std::invalid_argument("mixture component '" + comp +
                                        "': expected weight@mx,my[@c00,c01,c11]");
        }
        GaussianComponent c;
        const std::vector<double> w = parse_numbers(trim(fields[0]), "mixture weight");
        if (w.size() != 1) throw std::invalid_argument("mixture weight: one number expected");
        c.weight = w[0];
        const std::vector<double> mean = parse_numbers(trim(fields[1]), "mixture mean");
        if (mean.size() != 2) throw std::invalid_argument("mixture mean: two numbers expected");
        c.mean = {mean[0], mean[1]};
        if (fields.size() == 3) {
            const std::vector<double> cov = parse_numbers(trim(fields[2]), "mixture covariance");
            if (cov.size() != 3) {
                throw std::invalid_argument(
                    "mixture covariance: three numbers expected (c00,c01,c11)");
            }
            c.cov = {cov[0], cov[1], cov[1], cov[2]};
        }
        comps.push_back(c);
    }
    return GaussianMixture(std::move(comps));
}

GaussianMixture default_pi0() { return parse_mixture("0.5@-8,3;0.5@-8,-3"); }

GaussianMixture default_pi1() {
    return parse_mixture("0.3333333333333333@8,-4;0.3333333333333333@8,0;0.3333333333333334@8,4");
}

std::unique_ptr<AnalyticField> parse_field(const std::string& text, int dim) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("field '" + text + "': expected name:params");
    }
    const std::string name = trim(text.substr(0, colon));
    const std::string params = trim(text.substr(colon + 1));
    if (name == "constant") {
        return std::make_unique<AnalyticField>(
            AnalyticField::constant(parse_numbers(params, "constant field")));
    }
    if (name == "linear") {
        const std::vector<double> p = parse_numbers(params, "linear field");
        if (p.size() != 1) throw std::invalid_argument("linear field: one rate expected");
        return std::make_unique<AnalyticField>(AnalyticField::linear_scalar(p[0], dim));
    }
    if (name == "timeonly") {
        return std::make_unique<AnalyticField>(
            AnalyticField::time_poly(parse_numbers(params, "timeonly field"), dim));
    }
    throw std::invalid_argument("field '" + name + "': expected constant|linear|timeonly");
}

TimeGrid make_schedule(const std::string& schedule, int steps, bool forward) {
    if (schedule == "uniform") {
        return forward ? TimeGrid::uniform(0.0, 1.0, steps) : TimeGrid::uniform(1.0, 0.0, steps);
    }
    const std::string prefix = "power:";
    if (schedule.rfind(prefix, 0) == 0) {
        const std::vector<double> g = parse_numbers(schedule.substr(prefix.size()), "power gamma");
        if (g.size() != 1) throw std::invalid_argument("power schedule: one gamma expected");
        TimeGrid grid = TimeGrid::power(g[0], steps);
        return forward ? grid : grid.reversed();
    }
    throw std::invalid_argument("schedule '" + schedule + "': expected uniform|power:gamma");
}

}  // namespace fireflow
