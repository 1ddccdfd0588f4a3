#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "fgan/gan.hpp"
#include "fgan/sim.hpp"

namespace fgan {

// Strict scenario parsing: unknown keys are rejected and every error names
// the offending key path. A missing key takes its documented default; an
// empty object is the default two-cluster scenario.
SimConfig parse_config(const std::filesystem::path& path);
SimConfig parse_config_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SimConfig& config);

// Labelled feature vectors: header row (feature names, then the label
// column), comma-separated, "." decimal point, labels genuine|malicious.
// expected_dim == 0 infers the width from the header. Values are written
// with 17 significant digits so a round trip is exact.
Batch load_feature_csv(const std::filesystem::path& path, std::size_t expected_dim);
void save_feature_csv(const std::filesystem::path& path, const Batch& batch);

struct Checkpoint {
    GanModel model;
    std::uint64_t round_index = 0;
    std::uint64_t config_digest = 0;
};

// Binary container ("FGCK" magic) holding both parameter vectors together
// with their spec hashes; loads refuse mismatched or truncated files without
// producing a partial model.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Metrics stream: one JSON record per line, one line per coordination round
// plus a final summary. Doubles are rendered with 17 significant digits.
std::string to_metrics_line(const RoundRecord& record);
std::string to_metrics_line(const SummaryRecord& summary);
void write_metrics(std::ostream& out, const SimMetrics& metrics);

// Streams records as the simulation runs, flushing after every line.
class StreamMetricsSink : public MetricsSink {
public:
    explicit StreamMetricsSink(std::ostream& out) : out_(out) {}
    void on_round(const RoundRecord& record) override;
    void on_summary(const SummaryRecord& summary) override;

private:
    std::ostream& out_;
};

}  // namespace fgan
