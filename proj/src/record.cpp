#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "rgc/error.hpp"
#include "rgc/io_util.hpp"
#include "rgc/trainer.hpp"

namespace rgc {

using nlohmann::ordered_json;

namespace {

ordered_json optional_number(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string csv_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

ordered_json stats_json(const MetricStats& s) { return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; }

}  // namespace

std::string record_json(const RunRecord& r) {
    ordered_json j;
    ordered_json cfg = ordered_json::object();
    for (const auto& [k, v] : r.config.to_map()) cfg[k] = v;
    j["config"] = cfg;

    ordered_json summary;
    summary["k_final"] = r.summary.k_final;
    summary["nmi"] = optional_number(r.summary.nmi);
    summary["ari"] = optional_number(r.summary.ari);
    summary["wss"] = r.summary.wss;
    summary["seed"] = r.summary.seed;
    summary["quality_updates"] = r.summary.quality_updates;
    summary["experiences"] = r.summary.experiences;
    j["summary"] = summary;

    ordered_json epochs = ordered_json::array();
    for (const auto& e : r.epochs) {
        ordered_json je;
        je["epoch"] = e.epoch;
        je["epsilon"] = e.epsilon;
        je["k"] = e.k;
        je["reward"] = e.reward;
        je["loss_total"] = e.loss_total;
        je["loss_contrastive"] = e.loss_contrastive;
        je["loss_clustering"] = e.loss_clustering;
        je["nmi"] = optional_number(e.nmi);
        je["ari"] = optional_number(e.ari);
        je["quality"] = e.quality;
        epochs.push_back(std::move(je));
    }
    j["epochs"] = std::move(epochs);
    j["quality_losses"] = r.quality_losses;
    return j.dump(1) + "\n";
}

std::string epochs_csv(const RunRecord& r) {
    std::string out = "epoch,epsilon,k,reward,loss_total,loss_contrastive,loss_clustering,nmi,ari";
    const std::size_t actions = r.config.max_k - 1;
    for (std::size_t a = 0; a < actions; ++a) out += ",q_k" + std::to_string(a + 2);
    out += '\n';
    for (const auto& e : r.epochs) {
        out += std::to_string(e.epoch) + ',' + format_double(e.epsilon) + ',' + std::to_string(e.k) + ',' +
               format_double(e.reward) + ',' + format_double(e.loss_total) + ',' +
               format_double(e.loss_contrastive) + ',' + format_double(e.loss_clustering) + ',' +
               csv_optional(e.nmi) + ',' + csv_optional(e.ari);
        for (std::size_t a = 0; a < actions; ++a) {
            out += ',';
            if (a < e.quality.size()) out += format_double(e.quality[a]);
        }
        out += '\n';
    }
    return out;
}

void write_record(const RunRecord& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "record.json", record_json(r));
    write_file_atomic(dir / "epochs.csv", epochs_csv(r));
    std::string assignment;
    for (int a : r.final_clustering.assignment) assignment += std::to_string(a) + "\n";
    write_file_atomic(dir / "assignment.txt", assignment);
    ordered_json timing{{"wall_seconds", r.summary.wall_seconds}};
    write_file_atomic(dir / "timing.json", timing.dump(1) + "\n");
    if (r.config.export_embedding) save_features(r.final_embedding, dir / "embedding.txt");
}

MetricStats mean_std(std::span<const double> values) {
    MetricStats s;
    s.count = values.size();
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

Aggregate aggregate(std::span<const RunRecord> records) {
    if (records.empty()) throw ArgumentError("aggregate: no records");
    auto without_seed = [](RunConfig c) {
        c.seed = 0;
        return c;
    };
    const RunConfig reference = without_seed(records.front().config);
    std::vector<double> ks, nmis, aris, walls;
    bool have_nmi = true, have_ari = true;
    Aggregate a;
    for (const auto& r : records) {
        if (!(without_seed(r.config) == reference))
            throw ArgumentError("aggregate: records were produced by different configurations");
        ks.push_back(r.summary.k_final);
        walls.push_back(r.summary.wall_seconds);
        if (r.summary.nmi) nmis.push_back(*r.summary.nmi); else have_nmi = false;
        if (r.summary.ari) aris.push_back(*r.summary.ari); else have_ari = false;
        a.seeds.push_back(r.summary.seed);
    }
    a.k_final = mean_std(ks);
    a.wall_seconds = mean_std(walls);
    if (have_nmi) a.nmi = mean_std(nmis);
    if (have_ari) a.ari = mean_std(aris);
    return a;
}

std::string format_mean_std(const MetricStats& s, double factor) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f±%.2f", s.mean * factor, s.std * factor);
    return buf;
}

std::string aggregate_json(const Aggregate& a) {
    ordered_json j;
    j["runs"] = a.k_final.count;
    j["seeds"] = a.seeds;
    j["k_final"] = stats_json(a.k_final);
    j["k_final_text"] = format_mean_std(a.k_final);
    j["nmi"] = a.nmi ? stats_json(*a.nmi) : ordered_json(nullptr);
    j["ari"] = a.ari ? stats_json(*a.ari) : ordered_json(nullptr);
    if (a.nmi) j["nmi_percent_text"] = format_mean_std(*a.nmi, 100.0);
    if (a.ari) j["ari_percent_text"] = format_mean_std(*a.ari, 100.0);
    j["wall_seconds"] = stats_json(a.wall_seconds);
    return j.dump(1) + "\n";
}

}  // namespace rgc
