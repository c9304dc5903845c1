#include "rgc/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "rgc/error.hpp"
#include "rgc/io_util.hpp"

namespace rgc {

namespace {

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
    T v{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty())
        throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("invalid value '" + text + "' for key '" + key + "' (expected true/false)");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Field {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number(const char* key, T RunConfig::*member) {
    return {key, [key, member](RunConfig& c, const std::string& v) { c.*member = parse_value<T>(key, v); },
            [member](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<T>)
                    return format_double(c.*member);
                else
                    return std::to_string(c.*member);
            }};
}

template <typename T>
Field synth_number(const char* key, T SbmParams::*member) {
    return {key, [key, member](RunConfig& c, const std::string& v) { c.synth.*member = parse_value<T>(key, v); },
            [member](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<T>)
                    return format_double(c.synth.*member);
                else
                    return std::to_string(c.synth.*member);
            }};
}

Field text(const char* key, std::string RunConfig::*member) {
    return {key, [member](RunConfig& c, const std::string& v) { c.*member = v; },
            [member](const RunConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> all = {
        text("edges", &RunConfig::edges),
        text("features", &RunConfig::features),
        text("labels", &RunConfig::labels),
        synth_number("synth_blocks", &SbmParams::blocks),
        synth_number("synth_per_block", &SbmParams::nodes_per_block),
        synth_number("synth_p_in", &SbmParams::p_in),
        synth_number("synth_p_out", &SbmParams::p_out),
        synth_number("synth_dim", &SbmParams::feature_dim),
        synth_number("synth_sep", &SbmParams::mean_separation),
        synth_number("synth_seed", &SbmParams::seed),
        number("hops", &RunConfig::hops),
        number("latent_dim", &RunConfig::latent_dim),
        number("encoder_hidden", &RunConfig::encoder_hidden),
        number("quality_hidden", &RunConfig::quality_hidden),
        number("max_k", &RunConfig::max_k),
        number("alpha", &RunConfig::alpha),
        number("gamma", &RunConfig::gamma),
        number("epsilon_initial", &RunConfig::epsilon_initial),
        number("epsilon_final", &RunConfig::epsilon_final),
        number("buffer_capacity", &RunConfig::buffer_capacity),
        number("encoder_epochs", &RunConfig::encoder_epochs),
        number("quality_epochs", &RunConfig::quality_epochs),
        number("lr_encoder", &RunConfig::lr_encoder),
        number("lr_quality", &RunConfig::lr_quality),
        number("temperature", &RunConfig::temperature),
        number("kmeans_restarts", &RunConfig::kmeans_restarts),
        number("kmeans_max_iters", &RunConfig::kmeans_max_iters),
        number("seed", &RunConfig::seed),
        number("fixed_k", &RunConfig::fixed_k),
        {"export_embedding",
         [](RunConfig& c, const std::string& v) { c.export_embedding = parse_bool("export_embedding", v); },
         [](const RunConfig& c) { return std::string(c.export_embedding ? "true" : "false"); }},
    };
    return all;
}

void require(bool ok, const char* key, const std::string& why) {
    if (!ok) throw ConfigError("key '" + std::string(key) + "': " + why);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    for (const auto& f : fields())
        if (key == f.key) {
            f.set(*this, value);
            return;
        }
    throw ConfigError("unknown key '" + key + "'");
}

std::map<std::string, std::string> RunConfig::to_map() const {
    std::map<std::string, std::string> out;
    for (const auto& f : fields()) out.emplace(f.key, f.get(*this));
    return out;
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& f : fields()) out += std::string(f.key) + "=" + f.get(*this) + "\n";
    return out;
}

void RunConfig::validate() const {
    if (uses_synthetic()) {
        require(features.empty() && labels.empty(), "edges", "features/labels given without an edge file");
        require(synth.blocks >= 1, "synth_blocks", "must be >= 1");
        require(synth.nodes_per_block >= 1, "synth_per_block", "must be >= 1");
        require(0.0 <= synth.p_out && synth.p_out <= synth.p_in && synth.p_in <= 1.0, "synth_p_in",
                "need 0 <= synth_p_out <= synth_p_in <= 1");
        require(synth.feature_dim >= synth.blocks, "synth_dim", "must be >= synth_blocks");
        require(synth.mean_separation >= 0.0, "synth_sep", "must be >= 0");
    } else {
        require(!features.empty(), "features", "required when edges is set");
    }
    require(hops >= 0 && hops <= 5, "hops", "must lie in [0, 5]");
    require(latent_dim >= 1, "latent_dim", "must be >= 1");
    require(quality_hidden >= 1, "quality_hidden", "must be >= 1");
    require(max_k >= 3, "max_k", "must be >= 3");
    require(alpha >= 0.0, "alpha", "must be >= 0");
    require(gamma >= 0.0 && gamma <= 1.0, "gamma", "must lie in [0, 1]");
    require(epsilon_initial >= 0.0 && epsilon_initial <= 1.0, "epsilon_initial", "must lie in [0, 1]");
    require(epsilon_final >= epsilon_initial && epsilon_final <= 1.0, "epsilon_final",
            "must lie in [epsilon_initial, 1]");
    require(buffer_capacity >= 1, "buffer_capacity", "must be >= 1");
    require(encoder_epochs >= 1, "encoder_epochs", "must be >= 1");
    require(lr_encoder > 0.0, "lr_encoder", "must be > 0");
    require(lr_quality > 0.0, "lr_quality", "must be > 0");
    require(temperature > 0.0, "temperature", "must be > 0");
    require(kmeans_restarts >= 1, "kmeans_restarts", "must be >= 1");
    require(kmeans_max_iters >= 1, "kmeans_max_iters", "must be >= 1");
    require(fixed_k == 0 || fixed_k >= 1, "fixed_k", "must be 0 or >= 1");
}

RunConfig parse_config(const std::string& content, const std::string& source) {
    RunConfig cfg;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected key=value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        try {
            cfg.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg = parse_config(ss.str(), path.string());
    const auto base = path.parent_path();
    for (std::string* p : {&cfg.edges, &cfg.features, &cfg.labels})
        if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
    return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
    if (const char* s = std::getenv("RGC_SEED")) cfg.set("seed", s);
}

AttributedGraph load_dataset(const RunConfig& cfg) {
    if (cfg.uses_synthetic()) return generate_sbm(cfg.synth);
    std::optional<std::filesystem::path> labels;
    if (!cfg.labels.empty()) labels = cfg.labels;
    return load_graph(cfg.edges, cfg.features, labels);
}

}  // namespace rgc
