#include "kou2d/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kou2d {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

double to_number(const std::string& key, const std::string& text) {
    std::string t = trim(text);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw std::invalid_argument("config: key '" + key + "' is not a number: " + t);
    }
    return v;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[' && body.back() == ']' && body.find('=') == std::string::npos) {
            continue;
        }
        auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not of the form key = value");
        }
        std::string key = trim(std::string_view(body).substr(0, eq));
        std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument("config: empty key on line " + std::to_string(lineno));
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("config: cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::optional<double> ConfigFile::number(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return to_number(key, it->second);
}

std::optional<std::string> ConfigFile::string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    const std::string& v = it->second;
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

std::optional<std::vector<double>> ConfigFile::list(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::string v = it->second;
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
        return std::vector<double>{to_number(key, v)};
    }
    std::vector<double> out;
    std::string inner = v.substr(1, v.size() - 2);
    std::istringstream items(inner);
    std::string item;
    while (std::getline(items, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(to_number(key, item));
    }
    return out;
}

KouParams params_from_config(const ConfigFile& cfg) {
    KouParams p;
    auto set = [&](const char* key, double& field) {
        if (auto v = cfg.number(key)) field = *v;
    };
    set("sigma1", p.sigma1);
    set("sigma2", p.sigma2);
    set("r", p.r);
    set("rho", p.rho);
    set("lambda", p.lambda);
    set("p1", p.p1);
    set("p2", p.p2);
    set("eta_p1", p.eta_p1);
    set("eta_q1", p.eta_q1);
    set("eta_p2", p.eta_p2);
    set("eta_q2", p.eta_q2);
    set("K", p.K);
    set("T", p.T);
    return p;
}

}  // namespace kou2d
