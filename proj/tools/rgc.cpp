// rgc: command-line driver for training, sweeps, synthetic data and evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rgc/cluster.hpp"
#include "rgc/config.hpp"
#include "rgc/error.hpp"
#include "rgc/estimators.hpp"
#include "rgc/graph.hpp"
#include "rgc/io_util.hpp"
#include "rgc/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

rgc::RunConfig make_config(const std::string& path, const std::vector<std::string>& overrides) {
    rgc::RunConfig cfg = path.empty() ? rgc::RunConfig{} : rgc::load_config(path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw rgc::ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    rgc::apply_env_overrides(cfg);
    cfg.validate();
    return cfg;
}

std::string opt(const std::optional<double>& v) {
    char buf[32];
    if (!v) return "n/a";
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

int cmd_train(const rgc::RunConfig& base, const fs::path& out, std::size_t runs) {
    const rgc::AttributedGraph g = rgc::load_dataset(base);
    std::vector<rgc::RunRecord> records;
    for (std::size_t r = 0; r < runs; ++r) {
        rgc::RunConfig cfg = base;
        cfg.seed = base.seed + r;
        rgc::RunRecord rec = rgc::rgc_train(g, cfg);
        const fs::path dir = runs == 1 ? out : out / ("run_" + std::to_string(cfg.seed));
        rgc::write_record(rec, dir);
        std::printf("seed %llu: K=%d NMI=%s ARI=%s wall=%.2fs -> %s\n",
                    static_cast<unsigned long long>(cfg.seed), rec.summary.k_final, opt(rec.summary.nmi).c_str(),
                    opt(rec.summary.ari).c_str(), rec.summary.wall_seconds, dir.string().c_str());
        records.push_back(std::move(rec));
    }
    if (runs > 1) {
        const rgc::Aggregate agg = rgc::aggregate(records);
        rgc::write_file_atomic(out / "summary.json", rgc::aggregate_json(agg));
        std::printf("K %s", rgc::format_mean_std(agg.k_final).c_str());
        if (agg.nmi) std::printf("  NMI %s", rgc::format_mean_std(*agg.nmi, 100.0).c_str());
        if (agg.ari) std::printf("  ARI %s", rgc::format_mean_std(*agg.ari, 100.0).c_str());
        std::printf("\n");
    }
    return 0;
}

int cmd_sweep_k(const rgc::RunConfig& base, int k_min, int k_max, const std::string& out) {
    if (k_min < 1 || k_max < k_min) throw rgc::ArgumentError("need 1 <= k-min <= k-max");
    const rgc::AttributedGraph g = rgc::load_dataset(base);
    std::string csv = "k,nmi,ari,wss,final_reward,wall_seconds\n";
    std::printf("%4s %8s %8s %12s %8s\n", "K", "NMI", "ARI", "WSS", "wall[s]");
    for (int k = k_min; k <= k_max; ++k) {
        rgc::RunConfig cfg = base;
        cfg.fixed_k = static_cast<std::size_t>(k);
        const rgc::RunRecord rec = rgc::rgc_train(g, cfg);
        std::printf("%4d %8s %8s %12.6g %8.2f\n", k, opt(rec.summary.nmi).c_str(), opt(rec.summary.ari).c_str(),
                    rec.summary.wss, rec.summary.wall_seconds);
        csv += std::to_string(k) + "," + (rec.summary.nmi ? rgc::format_double(*rec.summary.nmi) : "") + "," +
               (rec.summary.ari ? rgc::format_double(*rec.summary.ari) : "") + "," +
               rgc::format_double(rec.summary.wss) + "," + rgc::format_double(rec.epochs.back().reward) + "," +
               rgc::format_double(rec.summary.wall_seconds) + "\n";
    }
    if (!out.empty()) rgc::write_file_atomic(fs::path(out) / "sweep_k.csv", csv);
    return 0;
}

int cmd_elbow(const rgc::RunConfig& base, int k_max, const std::string& out) {
    const rgc::AttributedGraph g = rgc::load_dataset(base);
    const rgc::ElbowCurve curve = rgc::elbow_sweep(g, base, k_max);
    double total = 0.0;
    std::printf("%4s %12s %8s\n", "K", "WSS", "wall[s]");
    for (std::size_t i = 0; i < curve.ks.size(); ++i) {
        std::printf("%4d %12.6g %8.2f\n", curve.ks[i], curve.wss_values[i], curve.wall_times[i]);
        total += curve.wall_times[i];
    }
    std::printf("knee: %d (%s)\nthumb rule: %d\ntotal wall: %.2fs\n", curve.knee,
                curve.distinct ? "distinct" : "no distinct elbow", rgc::thumb_rule(g.n), total);
    if (!out.empty()) {
        ordered_json j{{"ks", curve.ks},          {"wss", curve.wss_values}, {"wall_seconds", curve.wall_times},
                       {"knee", curve.knee},      {"distinct", curve.distinct},
                       {"thumb_rule", rgc::thumb_rule(g.n)}};
        rgc::write_file_atomic(fs::path(out) / "elbow.json", j.dump(1) + "\n");
    }
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& true_path) {
    const auto pred = rgc::load_labels(pred_path);
    const auto truth = rgc::load_labels(true_path);
    std::printf("NMI %.6f\nARI %.6f\n", rgc::nmi(truth, pred), rgc::ari(truth, pred));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reinforcement graph clustering: learns embeddings and the cluster count together"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    std::size_t runs = 1;
    auto* train = app.add_subcommand("train", "Train once (or over several seeds) and write the run record");
    train->add_option("--config", config_path, "key=value config file");
    train->add_option("--out", out_dir, "output directory")->required();
    train->add_option("--runs", runs, "number of consecutive seeds; > 1 also writes summary.json")
        ->check(CLI::PositiveNumber);
    train->add_option("--set", overrides, "override a config key (key=value), repeatable");

    int k_min = 2, k_max = 10;
    auto* sweep = app.add_subcommand("sweep-k", "Fixed-K runs over a range of cluster numbers");
    sweep->add_option("--config", config_path, "key=value config file");
    sweep->add_option("--k-min", k_min);
    sweep->add_option("--k-max", k_max);
    sweep->add_option("--out", out_dir, "directory for sweep_k.csv");
    sweep->add_option("--set", overrides, "override a config key (key=value), repeatable");

    auto* elbow = app.add_subcommand("elbow", "ELBOW baseline: WSS curve, knee and per-K timings");
    elbow->add_option("--config", config_path, "key=value config file");
    elbow->add_option("--k-max", k_max);
    elbow->add_option("--out", out_dir, "directory for elbow.json");
    elbow->add_option("--set", overrides, "override a config key (key=value), repeatable");

    rgc::SbmParams sbm;
    auto* synth = app.add_subcommand("synth", "Write a stochastic block model dataset");
    synth->add_option("--blocks", sbm.blocks)->required();
    synth->add_option("--per-block", sbm.nodes_per_block)->required();
    synth->add_option("--p-in", sbm.p_in)->required();
    synth->add_option("--p-out", sbm.p_out)->required();
    synth->add_option("--dim", sbm.feature_dim)->required();
    synth->add_option("--sep", sbm.mean_separation)->required();
    synth->add_option("--seed", sbm.seed)->required();
    synth->add_option("--out", out_dir, "output directory")->required();

    std::string pred_path, true_path;
    auto* eval = app.add_subcommand("eval", "NMI and ARI between two label files");
    eval->add_option("--pred", pred_path)->required();
    eval->add_option("--true", true_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(make_config(config_path, overrides), out_dir, runs);
        if (sweep->parsed()) return cmd_sweep_k(make_config(config_path, overrides), k_min, k_max, out_dir);
        if (elbow->parsed()) return cmd_elbow(make_config(config_path, overrides), k_max, out_dir);
        if (synth->parsed()) {
            const rgc::AttributedGraph g = rgc::generate_sbm(sbm);
            const fs::path dir(out_dir);
            rgc::save_graph(g, dir / "edges.txt", dir / "features.txt", dir / "labels.txt");
            std::printf("wrote %zu nodes, %zu edges to %s\n", g.n, g.edges.size(), dir.string().c_str());
            return 0;
        }
        if (eval->parsed()) return cmd_eval(pred_path, true_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
