#include "cgqg/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cgqg/common.hpp"

namespace cgqg::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

}  // namespace

Toml Toml::parse_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_string(ss.str());
}

Toml Toml::parse_string(const std::string& text) {
    Toml t;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key =
            (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        if (raw.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty value");

        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"')
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated string");
            t.kv_[key] = raw.substr(1, raw.size() - 2);
        } else if (raw == "true" || raw == "false") {
            t.kv_[key] = (raw == "true");
        } else if (raw.front() == '[') {
            if (raw.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated array");
            std::vector<double> vals;
            std::stringstream as(raw.substr(1, raw.size() - 2));
            std::string cell;
            while (std::getline(as, cell, ',')) {
                cell = trim(cell);
                if (cell.empty()) continue;
                vals.push_back(std::stod(cell));
            }
            t.kv_[key] = vals;
        } else {
            try {
                std::size_t used = 0;
                const double v = std::stod(raw, &used);
                if (used != raw.size()) throw std::invalid_argument(raw);
                t.kv_[key] = v;
            } catch (const std::exception&) {
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": cannot parse value '" + raw + "'");
            }
        }
    }
    return t;
}

double Toml::number(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing config key: " + key);
    if (const double* v = std::get_if<double>(&it->second)) return *v;
    throw ConfigError("config key is not a number: " + key);
}

double Toml::number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

long Toml::integer(const std::string& key) const {
    const double v = number(key);
    const long n = std::lround(v);
    if (v != double(n)) throw ConfigError("config key is not an integer: " + key);
    return n;
}

long Toml::integer_or(const std::string& key, long fallback) const {
    return has(key) ? integer(key) : fallback;
}

bool Toml::boolean_or(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (const bool* v = std::get_if<bool>(&it->second)) return *v;
    throw ConfigError("config key is not a boolean: " + key);
}

std::string Toml::str(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing config key: " + key);
    if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
    throw ConfigError("config key is not a string: " + key);
}

std::string Toml::str_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
}

std::vector<double> Toml::array(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing config key: " + key);
    if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
    throw ConfigError("config key is not an array: " + key);
}

std::vector<double> Toml::array_or(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? array(key) : fallback;
}

std::string Toml::canonical() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k + " = ";
        if (const bool* b = std::get_if<bool>(&v)) {
            out += *b ? "true" : "false";
        } else if (const double* d = std::get_if<double>(&v)) {
            out += fmt_g17(*d);
        } else if (const std::string* s = std::get_if<std::string>(&v)) {
            out += "\"" + *s + "\"";
        } else {
            const auto& arr = std::get<std::vector<double>>(v);
            out += "[";
            for (std::size_t i = 0; i < arr.size(); ++i)
                out += (i ? ", " : "") + fmt_g17(arr[i]);
            out += "]";
        }
        out += "\n";
    }
    return out;
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig c;
    c.fine = qg::QgParams::jet(128, 128, 900.0);
    c.coarse = qg::QgParams::jet(32, 32, 7200.0);
    c.family = closure::ClosureFamily{closure::FamilyKind::LinearSpectral, true, 12};
    c.train.curriculum = {{1, 60}, {4, 60}, {12, 50}, {36, 40}, {108, 30}, {288, 25}};
    c.train.S = 4;
    c.train.batch = 3;
    c.train.es.population = 16;
    c.train.es.sigma0 = 0.02;
    c.train.es.sigma_decay = 0.99;
    c.train.es.sigma_min = 3e-4;
    c.train.es.lr0 = 0.1;
    c.train.es.lr_decay = 0.995;
    c.train.es.lr_min = 2e-3;
    c.finalize();
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    return from_toml(Toml::parse_file(path));
}

ExperimentConfig ExperimentConfig::from_toml(const Toml& t) {
    ExperimentConfig c = defaults();

    auto fill_params = [&](qg::QgParams& p, const std::string& sec) {
        p.Lx = t.number_or("domain.lx", p.Lx);
        p.Ly = t.number_or("domain.ly", p.Ly);
        p.H1 = t.number_or("physics.h1", p.H1);
        p.H2 = t.number_or("physics.h2", p.H2);
        p.Ubar1 = t.number_or("physics.ubar1", p.Ubar1);
        p.beta = t.number_or("physics.beta", p.beta);
        p.gamma = t.number_or("physics.gamma", p.gamma);
        p.rd = t.number_or("physics.rd", p.rd);
        p.nx = int(t.integer_or(sec + ".nx", p.nx));
        p.ny = int(t.integer_or(sec + ".ny", p.ny));
        p.dt = t.number_or(sec + ".dt", p.dt);
        p.validate();
    };
    fill_params(c.fine, "fine");
    fill_params(c.coarse, "coarse");

    c.spinup_days = t.number_or("generate.spinup_days", c.spinup_days);
    c.duration_days = t.number_or("generate.duration_days", c.duration_days);
    c.dataset_seed = uint64_t(t.integer_or("generate.seed", long(c.dataset_seed)));

    c.family = closure::ClosureFamily::parse(
        t.str_or("closure.family", "linear-spectral"),
        t.boolean_or("closure.stochastic", true),
        int(t.integer_or("closure.bands", c.family.bands)));

    auto ws = t.array_or("train.curriculum_w", {});
    auto its = t.array_or("train.curriculum_iters", {});
    if (!ws.empty()) {
        if (its.size() != ws.size())
            throw ConfigError("train.curriculum_w and train.curriculum_iters differ in length");
        c.train.curriculum.clear();
        for (std::size_t i = 0; i < ws.size(); ++i)
            c.train.curriculum.push_back({int(ws[i]), int(its[i])});
    }
    c.train.S = int(t.integer_or("train.ensemble", c.train.S));
    c.train.batch = int(t.integer_or("train.batch", c.train.batch));
    c.train.es.population = int(t.integer_or("train.population", c.train.es.population));
    c.train.es.sigma0 = t.number_or("train.sigma0", c.train.es.sigma0);
    c.train.es.sigma_decay = t.number_or("train.sigma_decay", c.train.es.sigma_decay);
    c.train.es.sigma_min = t.number_or("train.sigma_min", c.train.es.sigma_min);
    c.train.es.lr0 = t.number_or("train.lr0", c.train.es.lr0);
    c.train.es.lr_decay = t.number_or("train.lr_decay", c.train.es.lr_decay);
    c.train.es.lr_min = t.number_or("train.lr_min", c.train.es.lr_min);
    c.train.instability_penalty =
        t.number_or("loss.penalty_factor", c.train.instability_penalty);
    c.train_seed = uint64_t(t.integer_or("train.seed", long(c.train_seed)));

    c.eval_horizon_steps = int(t.integer_or("evaluate.horizon_steps", c.eval_horizon_steps));
    c.eval_ensemble = int(t.integer_or("evaluate.ensemble", c.eval_ensemble));
    c.longrun_days = t.number_or("evaluate.longrun_days", c.longrun_days);
    c.eval_seed = uint64_t(t.integer_or("evaluate.seed", long(c.eval_seed)));

    c.train.validate();
    c.finalize();
    return c;
}

std::string ExperimentConfig::canonical() const {
    std::string s;
    auto add = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
    auto params = [&](const qg::QgParams& p, const std::string& sec) {
        add(sec + ".nx", std::to_string(p.nx));
        add(sec + ".ny", std::to_string(p.ny));
        add(sec + ".dt", fmt_g17(p.dt));
    };
    add("domain.lx", fmt_g17(fine.Lx));
    add("domain.ly", fmt_g17(fine.Ly));
    add("physics.h1", fmt_g17(fine.H1));
    add("physics.h2", fmt_g17(fine.H2));
    add("physics.ubar1", fmt_g17(fine.Ubar1));
    add("physics.beta", fmt_g17(fine.beta));
    add("physics.gamma", fmt_g17(fine.gamma));
    add("physics.rd", fmt_g17(fine.rd));
    params(fine, "fine");
    params(coarse, "coarse");
    add("generate.spinup_days", fmt_g17(spinup_days));
    add("generate.duration_days", fmt_g17(duration_days));
    add("generate.seed", std::to_string(dataset_seed));
    add("closure.family", family.name());
    add("closure.bands", std::to_string(family.bands));
    std::string ws, its;
    for (const auto& ph : train.curriculum) {
        ws += std::to_string(ph.w) + " ";
        its += std::to_string(ph.iters) + " ";
    }
    add("train.curriculum_w", ws);
    add("train.curriculum_iters", its);
    add("train.ensemble", std::to_string(train.S));
    add("train.batch", std::to_string(train.batch));
    add("train.population", std::to_string(train.es.population));
    add("train.sigma0", fmt_g17(train.es.sigma0));
    add("train.sigma_decay", fmt_g17(train.es.sigma_decay));
    add("train.sigma_min", fmt_g17(train.es.sigma_min));
    add("train.lr0", fmt_g17(train.es.lr0));
    add("train.lr_decay", fmt_g17(train.es.lr_decay));
    add("train.lr_min", fmt_g17(train.es.lr_min));
    add("train.penalty_factor", fmt_g17(train.instability_penalty));
    add("train.seed", std::to_string(train_seed));
    add("evaluate.horizon_steps", std::to_string(eval_horizon_steps));
    add("evaluate.ensemble", std::to_string(eval_ensemble));
    add("evaluate.longrun_days", fmt_g17(longrun_days));
    add("evaluate.seed", std::to_string(eval_seed));
    return s;
}

void ExperimentConfig::finalize() { hash = fnv1a64(canonical()); }

}  // namespace cgqg::config
