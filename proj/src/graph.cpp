#include "rgc/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <string_view>

#include "rgc/error.hpp"
#include "rgc/io_util.hpp"

namespace rgc {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename T>
T parse_number(std::string_view tok, const std::string& file, std::size_t line_no) {
    T value{};
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (!tok.empty() && tok.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError(file, line_no, "cannot parse '" + std::string(tok) + "' as a number");
    return value;
}

class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path) : name_(path.string()), in_(path) {
        if (!in_) throw IoError("cannot open " + name_);
    }

    // Next line with CR stripped; false at EOF.
    bool next(std::string& line) {
        if (!std::getline(in_, line)) return false;
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }

    std::size_t line_no() const { return line_no_; }
    const std::string& name() const { return name_; }

private:
    std::string name_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
};

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

std::size_t AttributedGraph::class_count() const {
    if (!labels) return 0;
    return std::set<int>(labels->begin(), labels->end()).size();
}

void validate_and_canonicalize(AttributedGraph& g) {
    if (g.attributes.rows() != g.n || g.attributes.cols() != g.dim)
        throw ValidationError("attribute matrix is " + std::to_string(g.attributes.rows()) + "x" +
                              std::to_string(g.attributes.cols()) + ", expected " +
                              std::to_string(g.n) + "x" + std::to_string(g.dim));
    if (!g.attributes.all_finite()) throw ValidationError("attribute matrix has non-finite entries");
    std::vector<Edge> canon;
    canon.reserve(g.edges.size());
    for (auto [u, v] : g.edges) {
        if (u >= g.n || v >= g.n)
            throw ValidationError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                  ") out of range for " + std::to_string(g.n) + " nodes");
        if (u == v) continue;
        canon.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(canon.begin(), canon.end());
    canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
    g.edges = std::move(canon);
    if (g.labels && g.labels->size() != g.n)
        throw ValidationError("label count " + std::to_string(g.labels->size()) + " does not match " +
                              std::to_string(g.n) + " nodes");
    if (g.labels)
        for (int l : *g.labels)
            if (l < 0) throw ValidationError("negative label " + std::to_string(l));
}

static Matrix read_features(const std::filesystem::path& path) {
    LineReader in(path);
    std::string line;
    std::size_t n = 0, d = 0;
    for (;;) {
        if (!in.next(line)) throw ParseError(in.name(), in.line_no(), "missing 'N D' header");
        if (!blank(line)) break;
    }
    {
        const auto toks = split_ws(line);
        if (toks.size() != 2) throw ParseError(in.name(), in.line_no(), "header must be 'N D'");
        n = parse_number<std::size_t>(toks[0], in.name(), in.line_no());
        d = parse_number<std::size_t>(toks[1], in.name(), in.line_no());
    }
    Matrix x(n, d);
    std::size_t row = 0;
    while (in.next(line)) {
        if (blank(line)) continue;
        if (row >= n) throw ParseError(in.name(), in.line_no(), "more than " + std::to_string(n) + " rows");
        const auto toks = split_ws(line);
        if (toks.size() != d)
            throw ParseError(in.name(), in.line_no(),
                             "expected " + std::to_string(d) + " values, got " + std::to_string(toks.size()));
        for (std::size_t j = 0; j < d; ++j) x(row, j) = parse_number<double>(toks[j], in.name(), in.line_no());
        ++row;
    }
    if (row != n)
        throw ParseError(in.name(), in.line_no(),
                         "expected " + std::to_string(n) + " rows, got " + std::to_string(row));
    return x;
}

static std::vector<Edge> read_edges(const std::filesystem::path& path) {
    LineReader in(path);
    std::string line;
    std::vector<Edge> edges;
    while (in.next(line)) {
        if (blank(line)) continue;
        const auto first = line.find_first_not_of(" \t");
        if (line[first] == '#') continue;
        const auto toks = split_ws(line);
        if (toks.size() != 2) throw ParseError(in.name(), in.line_no(), "expected two node indices");
        edges.emplace_back(parse_number<std::size_t>(toks[0], in.name(), in.line_no()),
                           parse_number<std::size_t>(toks[1], in.name(), in.line_no()));
    }
    return edges;
}

std::vector<int> load_labels(const std::filesystem::path& path) {
    LineReader in(path);
    std::string line;
    std::vector<int> labels;
    while (in.next(line)) {
        if (blank(line)) continue;
        const auto toks = split_ws(line);
        if (toks.size() != 1) throw ParseError(in.name(), in.line_no(), "expected one integer label");
        labels.push_back(parse_number<int>(toks[0], in.name(), in.line_no()));
    }
    return labels;
}

AttributedGraph load_graph(const std::filesystem::path& edge_path, const std::filesystem::path& feature_path,
                           const std::optional<std::filesystem::path>& label_path) {
    AttributedGraph g;
    g.attributes = read_features(feature_path);
    g.n = g.attributes.rows();
    g.dim = g.attributes.cols();
    g.edges = read_edges(edge_path);
    if (label_path) g.labels = load_labels(*label_path);
    validate_and_canonicalize(g);
    return g;
}

void save_features(const Matrix& features, const std::filesystem::path& path) {
    std::string out = std::to_string(features.rows()) + " " + std::to_string(features.cols()) + "\n";
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto r = features.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) out += ' ';
            out += format_double(r[j]);
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

void save_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
    std::string out;
    for (int l : labels) out += std::to_string(l) + "\n";
    write_file_atomic(path, out);
}

void save_graph(const AttributedGraph& g, const std::filesystem::path& edge_path,
                const std::filesystem::path& feature_path,
                const std::optional<std::filesystem::path>& label_path) {
    std::string edges;
    for (auto [u, v] : g.edges) edges += std::to_string(u) + " " + std::to_string(v) + "\n";
    write_file_atomic(edge_path, edges);
    save_features(g.attributes, feature_path);
    if (label_path) {
        if (!g.labels) throw ArgumentError("graph has no labels to save");
        save_labels(*g.labels, *label_path);
    }
}

FilteredFeatures laplacian_smooth(const AttributedGraph& g, int hops) {
    if (hops < 0) throw ArgumentError("hops must be >= 0");
    const std::size_t n = g.n;
    // Neighbor lists of A + I in ascending order, so the accumulation order
    // does not depend on how the edge list was written.
    std::vector<std::vector<std::size_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) nbrs[i].push_back(i);
    for (auto [u, v] : g.edges) {
        if (u == v) continue;
        nbrs[u].push_back(v);
        nbrs[v].push_back(u);
    }
    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& l = nbrs[i];
        std::sort(l.begin(), l.end());
        l.erase(std::unique(l.begin(), l.end()), l.end());
        inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(l.size()));
    }

    FilteredFeatures out{g.attributes, hops};
    Matrix next(n, g.dim);
    for (int h = 0; h < hops; ++h) {
        next.fill(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = next.row(i);
            for (std::size_t j : nbrs[i]) {
                const double w = inv_sqrt_deg[i] * inv_sqrt_deg[j];
                const auto src = out.matrix.row(j);
                for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
            }
        }
        std::swap(out.matrix, next);
    }
    return out;
}

AttributedGraph generate_sbm(const SbmParams& p) {
    if (p.blocks < 1) throw ArgumentError("sbm: blocks must be >= 1");
    if (!(0.0 <= p.p_out && p.p_out <= p.p_in && p.p_in <= 1.0))
        throw ArgumentError("sbm: need 0 <= p_out <= p_in <= 1");
    if (p.feature_dim < p.blocks)
        throw ArgumentError("sbm: feature_dim must be >= blocks so block means can be placed apart");
    if (p.mean_separation < 0.0) throw ArgumentError("sbm: mean_separation must be >= 0");

    AttributedGraph g;
    g.n = p.blocks * p.nodes_per_block;
    g.dim = p.feature_dim;
    g.attributes = Matrix(g.n, g.dim);
    g.labels = std::vector<int>(g.n);

    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    for (std::size_t i = 0; i < g.n; ++i) (*g.labels)[i] = static_cast<int>(i / p.nodes_per_block);

    for (std::size_t u = 0; u < g.n; ++u)
        for (std::size_t v = u + 1; v < g.n; ++v) {
            const double prob = (*g.labels)[u] == (*g.labels)[v] ? p.p_in : p.p_out;
            if (coin(rng) < prob) g.edges.emplace_back(u, v);
        }

    // Block b sits at (sep / sqrt 2) e_b, so any two means are `sep` apart.
    const double offset = p.mean_separation / std::sqrt(2.0);
    for (std::size_t i = 0; i < g.n; ++i) {
        const auto b = static_cast<std::size_t>((*g.labels)[i]);
        for (std::size_t j = 0; j < g.dim; ++j) g.attributes(i, j) = noise(rng) + (j == b ? offset : 0.0);
    }
    validate_and_canonicalize(g);
    return g;
}

}  // namespace rgc
