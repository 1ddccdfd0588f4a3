#include "fgan/data_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include "fgan/hash.hpp"

namespace fgan {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

std::string join_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) fail(join_path(path, it.key()), "unknown key");
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& obj, const std::string& path, const char* key,
                  double def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_number()) fail(join_path(path, key), "expected a number");
    return v->get<double>();
}

std::uint64_t get_uint(const json& obj, const std::string& path, const char* key,
                       std::uint64_t def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_number_integer() && !v->is_number_unsigned()) {
        fail(join_path(path, key), "expected a non-negative integer");
    }
    if (v->is_number_integer() && v->get<std::int64_t>() < 0) {
        fail(join_path(path, key), "expected a non-negative integer");
    }
    return v->get<std::uint64_t>();
}

Tick get_tick(const json& obj, const std::string& path, const char* key, Tick def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_number_integer() && !v->is_number_unsigned()) {
        fail(join_path(path, key), "expected an integer");
    }
    return v->get<Tick>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_boolean()) fail(join_path(path, key), "expected true or false");
    return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key,
                       const std::string& def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_string()) fail(join_path(path, key), "expected a string");
    return v->get<std::string>();
}

std::vector<double> get_double_array(const json& obj, const std::string& path,
                                     const char* key,
                                     const std::vector<double>& def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_array()) fail(join_path(path, key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) fail(join_path(path, key), "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<std::size_t> get_size_array(const json& obj, const std::string& path,
                                        const char* key,
                                        const std::vector<std::size_t>& def) {
    const json* v = find(obj, key);
    if (!v) return def;
    if (!v->is_array()) fail(join_path(path, key), "expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& e : *v) {
        if (!e.is_number_integer() && !e.is_number_unsigned()) {
            fail(join_path(path, key), "expected an array of integers");
        }
        if (e.is_number_integer() && e.get<std::int64_t>() < 0) {
            fail(join_path(path, key), "entries must be non-negative");
        }
        out.push_back(e.get<std::size_t>());
    }
    return out;
}

AttackSpec parse_attack(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    check_keys(j, path, {"name", "mean_shift", "stddev_scale", "rate", "targets"});
    AttackSpec atk;
    if (!find(j, "name")) fail(join_path(path, "name"), "required key is missing");
    atk.name = get_string(j, path, "name", "");
    atk.mean_shift = get_double_array(j, path, "mean_shift", {});
    atk.stddev_scale = get_double_array(j, path, "stddev_scale", {});
    atk.rate = get_double(j, path, "rate", 0.0);
    if (const json* t = find(j, "targets")) {
        if (t->is_string()) {
            if (t->get<std::string>() != "all") {
                fail(join_path(path, "targets"),
                     "expected \"all\" or an array of node indices");
            }
        } else if (t->is_array()) {
            for (const auto& e : *t) {
                if (!e.is_number_integer() && !e.is_number_unsigned()) {
                    fail(join_path(path, "targets"), "expected node indices");
                }
                atk.targets.push_back(e.get<int>());
            }
        } else {
            fail(join_path(path, "targets"),
                 "expected \"all\" or an array of node indices");
        }
    }
    return atk;
}

TrafficSpec parse_traffic(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    check_keys(j, path,
               {"genuine_mean", "genuine_stddev", "genuine_per_tick", "attacks"});
    TrafficSpec tr;
    tr.genuine_mean = get_double_array(j, path, "genuine_mean", {});
    tr.genuine_stddev = get_double_array(j, path, "genuine_stddev", {});
    tr.genuine_per_tick =
        static_cast<int>(get_tick(j, path, "genuine_per_tick", 1));
    if (const json* a = find(j, "attacks")) {
        if (!a->is_array()) fail(join_path(path, "attacks"), "expected an array");
        for (std::size_t i = 0; i < a->size(); ++i) {
            tr.attacks.push_back(
                parse_attack((*a)[i], index_path(join_path(path, "attacks"), i)));
        }
    }
    return tr;
}

ThetaConfig parse_theta(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    check_keys(j, path, {"policy", "value", "min", "multiplier", "window"});
    ThetaConfig th;
    th.policy = get_string(j, path, "policy", th.policy);
    th.value = get_double(j, path, "value", th.value);
    th.min = get_double(j, path, "min", th.min);
    th.multiplier = get_double(j, path, "multiplier", th.multiplier);
    th.window = get_uint(j, path, "window", th.window);
    return th;
}

ClusterConfig parse_cluster(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    check_keys(j, path,
               {"node_count", "join_schedule", "C", "T_sus", "round_interval",
                "theta_a", "traffic"});
    ClusterConfig cl;
    cl.node_count = static_cast<int>(get_tick(j, path, "node_count", cl.node_count));
    if (const json* js = find(j, "join_schedule")) {
        if (!js->is_array()) {
            fail(join_path(path, "join_schedule"), "expected an array of ticks");
        }
        cl.join_schedule.clear();
        for (const auto& e : *js) {
            if (!e.is_number_integer() && !e.is_number_unsigned()) {
                fail(join_path(path, "join_schedule"), "expected an array of ticks");
            }
            cl.join_schedule.push_back(e.get<Tick>());
        }
    }
    cl.participation = get_double(j, path, "C", cl.participation);
    cl.suspension = get_tick(j, path, "T_sus", cl.suspension);
    cl.round_interval = get_tick(j, path, "round_interval", cl.round_interval);
    if (const json* th = find(j, "theta_a")) {
        cl.theta = parse_theta(*th, join_path(path, "theta_a"));
    }
    if (const json* tr = find(j, "traffic")) {
        cl.traffic = parse_traffic(*tr, join_path(path, "traffic"));
    }
    return cl;
}

}  // namespace

SimConfig parse_config_json(const json& j) {
    if (!j.is_object()) fail("config", "top level must be an object");
    check_keys(j, "",
               {"seed", "feature_dim", "duration", "threshold", "label_noise",
                "semi_supervised", "inverted_maturity", "suspend_traffic", "gan",
                "evaluation", "central", "clusters"});
    SimConfig cfg;
    cfg.seed = get_uint(j, "", "seed", cfg.seed);
    cfg.feature_dim = get_uint(j, "", "feature_dim", cfg.feature_dim);
    cfg.duration = get_tick(j, "", "duration", cfg.duration);
    cfg.threshold = get_double(j, "", "threshold", cfg.threshold);
    cfg.label_noise = get_double(j, "", "label_noise", cfg.label_noise);
    cfg.semi_supervised = get_bool(j, "", "semi_supervised", cfg.semi_supervised);
    cfg.inverted_maturity =
        get_bool(j, "", "inverted_maturity", cfg.inverted_maturity);
    cfg.suspend_traffic = get_bool(j, "", "suspend_traffic", cfg.suspend_traffic);

    if (const json* g = find(j, "gan")) {
        if (!g->is_object()) fail("gan", "expected an object");
        check_keys(*g, "gan",
                   {"noise_dim", "learning_rate", "batch_size", "steps",
                    "train_trigger", "disc_hidden", "gen_hidden"});
        cfg.gan.noise_dim = get_uint(*g, "gan", "noise_dim", cfg.gan.noise_dim);
        cfg.gan.learning_rate =
            get_double(*g, "gan", "learning_rate", cfg.gan.learning_rate);
        cfg.gan.batch_size = get_uint(*g, "gan", "batch_size", cfg.gan.batch_size);
        cfg.gan.steps = get_uint(*g, "gan", "steps", cfg.gan.steps);
        cfg.gan.train_trigger =
            get_uint(*g, "gan", "train_trigger", cfg.gan.train_trigger);
        cfg.gan.disc_hidden =
            get_size_array(*g, "gan", "disc_hidden", cfg.gan.disc_hidden);
        cfg.gan.gen_hidden =
            get_size_array(*g, "gan", "gen_hidden", cfg.gan.gen_hidden);
    }
    if (const json* e = find(j, "evaluation")) {
        if (!e->is_object()) fail("evaluation", "expected an object");
        check_keys(*e, "evaluation", {"set_size"});
        cfg.evaluation.set_size =
            get_uint(*e, "evaluation", "set_size", cfg.evaluation.set_size);
    }
    if (const json* c = find(j, "central")) {
        if (!c->is_object()) fail("central", "expected an object");
        check_keys(*c, "central", {"enabled", "C_central", "round_interval"});
        cfg.central.enabled = get_bool(*c, "central", "enabled", cfg.central.enabled);
        cfg.central.participation =
            get_double(*c, "central", "C_central", cfg.central.participation);
        cfg.central.round_interval =
            get_tick(*c, "central", "round_interval", cfg.central.round_interval);
    }
    if (const json* cl = find(j, "clusters")) {
        if (!cl->is_array()) fail("clusters", "expected an array");
        for (std::size_t i = 0; i < cl->size(); ++i) {
            cfg.clusters.push_back(
                parse_cluster((*cl)[i], index_path("clusters", i)));
        }
    } else {
        cfg.clusters = default_clusters(cfg.feature_dim);
    }
    cfg.materialize_defaults();
    cfg.validate();
    return cfg;
}

SimConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    return parse_config_json(j);
}

nlohmann::json config_to_json(const SimConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["feature_dim"] = config.feature_dim;
    j["duration"] = config.duration;
    j["threshold"] = config.threshold;
    j["label_noise"] = config.label_noise;
    j["semi_supervised"] = config.semi_supervised;
    j["inverted_maturity"] = config.inverted_maturity;
    j["suspend_traffic"] = config.suspend_traffic;
    j["gan"] = {{"noise_dim", config.gan.noise_dim},
                {"learning_rate", config.gan.learning_rate},
                {"batch_size", config.gan.batch_size},
                {"steps", config.gan.steps},
                {"train_trigger", config.gan.train_trigger},
                {"disc_hidden", config.gan.disc_hidden},
                {"gen_hidden", config.gan.gen_hidden}};
    j["evaluation"] = {{"set_size", config.evaluation.set_size}};
    j["central"] = {{"enabled", config.central.enabled},
                    {"C_central", config.central.participation},
                    {"round_interval", config.central.round_interval}};
    j["clusters"] = json::array();
    for (const ClusterConfig& cl : config.clusters) {
        json jc;
        jc["node_count"] = cl.node_count;
        jc["join_schedule"] = cl.join_schedule;
        jc["C"] = cl.participation;
        jc["T_sus"] = cl.suspension;
        jc["round_interval"] = cl.round_interval;
        jc["theta_a"] = {{"policy", cl.theta.policy},
                         {"value", cl.theta.value},
                         {"min", cl.theta.min},
                         {"multiplier", cl.theta.multiplier},
                         {"window", cl.theta.window}};
        json jt;
        jt["genuine_mean"] = cl.traffic.genuine_mean;
        jt["genuine_stddev"] = cl.traffic.genuine_stddev;
        jt["genuine_per_tick"] = cl.traffic.genuine_per_tick;
        jt["attacks"] = json::array();
        for (const AttackSpec& atk : cl.traffic.attacks) {
            json ja;
            ja["name"] = atk.name;
            ja["mean_shift"] = atk.mean_shift;
            ja["stddev_scale"] = atk.stddev_scale;
            ja["rate"] = atk.rate;
            if (atk.targets.empty()) {
                ja["targets"] = "all";
            } else {
                ja["targets"] = atk.targets;
            }
            jt["attacks"].push_back(std::move(ja));
        }
        jc["traffic"] = std::move(jt);
        j["clusters"].push_back(std::move(jc));
    }
    return j;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Batch load_feature_csv(const std::filesystem::path& path, std::size_t expected_dim) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_feature_csv: cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("load_feature_csv: " + path.string() +
                                 ": empty file (missing header)");
    }
    strip_cr(line);
    const std::size_t columns = split_csv_line(line).size();
    if (columns < 2) {
        throw std::runtime_error("load_feature_csv: " + path.string() +
                                 ": header needs feature columns and a label column");
    }
    const std::size_t d = expected_dim == 0 ? columns - 1 : expected_dim;
    if (columns != d + 1) {
        throw std::runtime_error(
            "load_feature_csv: " + path.string() + ": header has " +
            std::to_string(columns) + " columns, expected " + std::to_string(d + 1));
    }

    Batch batch;
    batch.labels.emplace();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != d + 1) {
            throw std::runtime_error("load_feature_csv: line " +
                                     std::to_string(line_no) + ": expected " +
                                     std::to_string(d + 1) + " fields, got " +
                                     std::to_string(fields.size()));
        }
        std::vector<double> row(d);
        for (std::size_t i = 0; i < d; ++i) {
            const std::string& f = fields[i];
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(f.c_str(), &end);
            if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(v)) {
                throw std::runtime_error("load_feature_csv: line " +
                                         std::to_string(line_no) + ": field " +
                                         std::to_string(i + 1) +
                                         " is not a finite number: \"" + f + "\"");
            }
            row[i] = v;
        }
        const std::string& lab = fields[d];
        Label label;
        if (lab == "genuine") {
            label = Label::genuine;
        } else if (lab == "malicious") {
            label = Label::malicious;
        } else {
            throw std::runtime_error("load_feature_csv: line " +
                                     std::to_string(line_no) +
                                     ": label must be genuine or malicious, got \"" +
                                     lab + "\"");
        }
        batch.samples.push_back(std::move(row));
        batch.labels->push_back(label);
    }
    if (batch.samples.empty()) {
        throw std::runtime_error("load_feature_csv: " + path.string() +
                                 ": no data rows");
    }
    return batch;
}

void save_feature_csv(const std::filesystem::path& path, const Batch& batch) {
    batch.validate();
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_feature_csv: cannot open " + path.string());
    }
    const std::size_t d = batch.dim();
    for (std::size_t i = 0; i < d; ++i) out << "f" << i << ",";
    out << "label\n";
    char buf[40];
    for (std::size_t r = 0; r < batch.size(); ++r) {
        for (std::size_t i = 0; i < d; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", batch.samples[r][i]);
            out << buf << ",";
        }
        const Label lab = batch.labels ? (*batch.labels)[r] : Label::genuine;
        out << (lab == Label::genuine ? "genuine" : "malicious") << "\n";
    }
    if (!out) {
        throw std::runtime_error("save_feature_csv: write failed for " +
                                 path.string());
    }
}

namespace {

constexpr char kCheckpointMagic[4] = {'F', 'G', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_spec(std::vector<std::uint8_t>& out, const MlpSpec& spec) {
    put_u32(out, static_cast<std::uint32_t>(spec.layer_sizes.size()));
    for (std::size_t s : spec.layer_sizes) put_u64(out, s);
    put_u8(out, static_cast<std::uint8_t>(spec.hidden_activation));
    put_u8(out, static_cast<std::uint8_t>(spec.output_activation));
}

struct Cursor {
    std::span<const std::uint8_t> buf;
    std::size_t off = 0;

    void need(std::size_t n) const {
        if (off + n > buf.size()) {
            throw std::runtime_error("load_checkpoint: truncated file");
        }
    }
    std::uint8_t u8() {
        need(1);
        return buf[off++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[off + i]) << (8 * i);
        off += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[off + i]) << (8 * i);
        off += 8;
        return v;
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = buf.subspan(off, n);
        off += n;
        return s;
    }
};

MlpSpec read_spec(Cursor& cur) {
    MlpSpec spec;
    const std::uint32_t n = cur.u32();
    if (n < 2 || n > 64) {
        throw std::runtime_error("load_checkpoint: implausible layer count");
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        spec.layer_sizes.push_back(static_cast<std::size_t>(cur.u64()));
    }
    const std::uint8_t hidden = cur.u8();
    const std::uint8_t output = cur.u8();
    if (hidden > 1 || output > 1) {
        throw std::runtime_error("load_checkpoint: unknown activation code");
    }
    spec.hidden_activation = static_cast<HiddenActivation>(hidden);
    spec.output_activation = static_cast<OutputActivation>(output);
    spec.validate();
    return spec;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    ckpt.model.validate();
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 4);
    put_u32(out, kCheckpointVersion);
    put_u64(out, ckpt.round_index);
    put_u64(out, ckpt.config_digest);
    put_u64(out, ckpt.model.noise_dim);
    put_spec(out, ckpt.model.generator_spec);
    put_spec(out, ckpt.model.discriminator_spec);
    auto gen_blob = serialize_params(ckpt.model.generator_spec,
                                     ckpt.model.generator_params);
    auto disc_blob = serialize_params(ckpt.model.discriminator_spec,
                                      ckpt.model.discriminator_params);
    out.insert(out.end(), gen_blob.begin(), gen_blob.end());
    out.insert(out.end(), disc_blob.begin(), disc_blob.end());

    // Write-then-rename so readers never see a half-written checkpoint.
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("save_checkpoint: cannot open " + tmp.string());
        }
        f.write(reinterpret_cast<const char*>(out.data()),
                static_cast<std::streamsize>(out.size()));
        if (!f) {
            throw std::runtime_error("save_checkpoint: write failed for " +
                                     tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    }
    std::vector<std::uint8_t> buf(
        (std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Cursor cur{buf};

    cur.need(4);
    if (std::memcmp(buf.data(), kCheckpointMagic, 4) != 0) {
        throw std::runtime_error("load_checkpoint: " + path.string() +
                                 " is not a checkpoint file (bad magic)");
    }
    cur.off = 4;
    const std::uint32_t version = cur.u32();
    if (version != kCheckpointVersion) {
        throw std::runtime_error("load_checkpoint: unsupported version " +
                                 std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.round_index = cur.u64();
    ckpt.config_digest = cur.u64();
    ckpt.model.noise_dim = static_cast<std::size_t>(cur.u64());
    ckpt.model.generator_spec = read_spec(cur);
    ckpt.model.discriminator_spec = read_spec(cur);

    const std::size_t gen_blob_size =
        12 + 8 * ckpt.model.generator_spec.param_count();
    ckpt.model.generator_params =
        deserialize_params(ckpt.model.generator_spec, cur.take(gen_blob_size));
    const std::size_t disc_blob_size =
        12 + 8 * ckpt.model.discriminator_spec.param_count();
    ckpt.model.discriminator_params =
        deserialize_params(ckpt.model.discriminator_spec, cur.take(disc_blob_size));

    if (cur.off != buf.size()) {
        throw std::runtime_error("load_checkpoint: trailing bytes after payload");
    }
    ckpt.model.validate();
    return ckpt;
}

namespace {

// Minimal JSON line emitter. nlohmann would work too, but it chooses its own
// float formatting; metrics pin doubles to 17 significant digits so audits
// can diff streams textually.
class JsonLine {
public:
    std::string take() { return std::move(s_); }

    void obj_open() {
        elem();
        s_ += '{';
        first_.push_back(true);
    }
    void obj_close() {
        s_ += '}';
        first_.pop_back();
    }
    void arr_open() {
        elem();
        s_ += '[';
        first_.push_back(true);
    }
    void arr_close() {
        s_ += ']';
        first_.pop_back();
    }
    void key(const char* k) {
        comma();
        s_ += '"';
        s_ += k;
        s_ += "\":";
        pending_value_ = true;
    }
    void str(const std::string& v) {
        elem();
        s_ += '"';
        for (char ch : v) {
            switch (ch) {
                case '"': s_ += "\\\""; break;
                case '\\': s_ += "\\\\"; break;
                case '\n': s_ += "\\n"; break;
                case '\r': s_ += "\\r"; break;
                case '\t': s_ += "\\t"; break;
                default:
                    if (static_cast<unsigned char>(ch) < 0x20) {
                        char esc[8];
                        std::snprintf(esc, sizeof(esc), "\\u%04x", ch);
                        s_ += esc;
                    } else {
                        s_ += ch;
                    }
            }
        }
        s_ += '"';
    }
    void num(double v) {
        elem();
        if (!std::isfinite(v)) {
            s_ += "null";
            return;
        }
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        s_ += buf;
    }
    void num(std::uint64_t v) {
        elem();
        s_ += std::to_string(v);
    }
    void num(std::int64_t v) {
        elem();
        s_ += std::to_string(v);
    }
    void boolean(bool v) {
        elem();
        s_ += v ? "true" : "false";
    }

private:
    void comma() {
        if (!first_.empty()) {
            if (!first_.back()) s_ += ',';
            first_.back() = false;
        }
    }
    void elem() {
        if (pending_value_) {
            pending_value_ = false;
            return;
        }
        comma();
    }

    std::string s_;
    std::vector<bool> first_;
    bool pending_value_ = false;
};

void emit_string_array(JsonLine& w, const char* key,
                       const std::vector<std::string>& values) {
    w.key(key);
    w.arr_open();
    for (const auto& v : values) w.str(v);
    w.arr_close();
}

void emit_double_array(JsonLine& w, const char* key,
                       const std::vector<double>& values) {
    w.key(key);
    w.arr_open();
    for (double v : values) w.num(v);
    w.arr_close();
}

void emit_eval_entries(JsonLine& w, const std::vector<EvalEntry>& entries) {
    w.arr_open();
    for (const EvalEntry& e : entries) {
        w.obj_open();
        w.key("cluster");
        w.str(e.cluster_id);
        w.key("attack");
        w.str(e.attack_name);
        w.key("auc");
        w.num(e.result.auc);
        w.key("accuracy");
        w.num(e.result.accuracy);
        w.key("fpr");
        w.num(e.result.false_positive_rate);
        w.obj_close();
    }
    w.arr_close();
}

void emit_events(JsonLine& w, const std::vector<RejectionEvent>& rejections,
                 const std::vector<BlacklistEvent>& blacklists,
                 const std::vector<ReinstateEvent>& reinstatements,
                 const char* rej_key, const char* bl_key, const char* re_key) {
    w.key(rej_key);
    w.arr_open();
    for (const auto& e : rejections) {
        w.obj_open();
        w.key("tick");
        w.num(static_cast<std::int64_t>(e.tick));
        w.key("source");
        w.str(e.source);
        w.key("reason");
        w.str(e.reason);
        w.obj_close();
    }
    w.arr_close();
    w.key(bl_key);
    w.arr_open();
    for (const auto& e : blacklists) {
        w.obj_open();
        w.key("tick");
        w.num(static_cast<std::int64_t>(e.tick));
        w.key("source");
        w.str(e.source);
        w.key("until");
        w.num(static_cast<std::int64_t>(e.until));
        w.obj_close();
    }
    w.arr_close();
    w.key(re_key);
    w.arr_open();
    for (const auto& e : reinstatements) {
        w.obj_open();
        w.key("tick");
        w.num(static_cast<std::int64_t>(e.tick));
        w.key("source");
        w.str(e.source);
        w.key("joined_at");
        w.num(static_cast<std::int64_t>(e.new_joined_at));
        w.obj_close();
    }
    w.arr_close();
}

}  // namespace

std::string to_metrics_line(const RoundRecord& record) {
    JsonLine w;
    const RoundReport& r = record.report;
    w.obj_open();
    w.key("kind");
    w.str("round");
    w.key("tier");
    w.str(record.tier);
    w.key("tier_id");
    w.str(r.tier_id);
    w.key("round");
    w.num(r.round_index);
    w.key("tick");
    w.num(static_cast<std::int64_t>(r.tick));
    w.key("noop");
    w.boolean(r.noop);
    w.key("queue_depth_before");
    w.num(static_cast<std::uint64_t>(r.queue_depth_before));
    w.key("intake");
    w.num(static_cast<std::uint64_t>(r.intake));
    w.key("intake_clamped");
    w.boolean(r.intake_clamped);
    w.key("uniform_impacts");
    w.boolean(r.uniform_impacts_fallback);
    emit_string_array(w, "accepted", r.accepted_sources);
    emit_double_array(w, "accepted_priorities", r.accepted_priorities);
    emit_double_array(w, "impacts", r.impacts);
    emit_string_array(w, "discarded", r.discarded_sources);
    emit_double_array(w, "discarded_priorities", r.discarded_priorities);
    w.key("theta_a");
    w.num(r.theta_in_force);
    w.key("diag_loss_fedavg");
    w.num(r.diag_loss_fedavg);
    w.key("diag_loss_fgan");
    w.num(r.diag_loss_fgan);
    w.key("aggregated_samples");
    w.num(r.aggregated_sample_total);
    w.key("model_hash");
    w.str(hash_hex(r.model_hash));
    w.key("eval");
    emit_eval_entries(w, record.eval);
    emit_events(w, record.rejections, record.blacklists, record.reinstatements,
                "rejections", "blacklists", "reinstatements");
    w.obj_close();
    return w.take();
}

std::string to_metrics_line(const SummaryRecord& summary) {
    JsonLine w;
    w.obj_open();
    w.key("kind");
    w.str("summary");
    w.key("duration");
    w.num(static_cast<std::int64_t>(summary.duration));
    w.key("proxy_rounds");
    w.num(summary.proxy_rounds);
    w.key("central_rounds");
    w.num(summary.central_rounds);
    w.key("blacklist_events");
    w.num(summary.blacklist_events);
    w.key("events_generated");
    w.num(summary.events_generated);
    w.key("events_ingested");
    w.num(summary.events_ingested);
    w.key("final_hashes");
    w.arr_open();
    for (const TierHash& th : summary.final_hashes) {
        w.obj_open();
        w.key("tier");
        w.str(th.tier_id);
        w.key("model_hash");
        w.str(hash_hex(th.model_hash));
        w.obj_close();
    }
    w.arr_close();
    w.key("final_eval");
    w.arr_open();
    for (const TierEval& te : summary.final_eval) {
        w.obj_open();
        w.key("tier");
        w.str(te.tier_id);
        w.key("entries");
        emit_eval_entries(w, te.entries);
        w.obj_close();
    }
    w.arr_close();
    w.key("nodes");
    w.arr_open();
    for (const NodeSummary& n : summary.nodes) {
        w.obj_open();
        w.key("id");
        w.str(n.id);
        w.key("attack_index");
        w.num(n.attack_index);
        w.key("malicious_labeled");
        w.num(n.malicious_labeled);
        w.key("dataset_size");
        w.num(n.dataset_size);
        w.key("training_sessions");
        w.num(n.training_sessions);
        w.obj_close();
    }
    w.arr_close();
    emit_events(w, summary.trailing_rejections, summary.trailing_blacklists,
                summary.trailing_reinstatements, "trailing_rejections",
                "trailing_blacklists", "trailing_reinstatements");
    w.key("config_digest");
    w.str(hash_hex(summary.config_digest));
    w.obj_close();
    return w.take();
}

void write_metrics(std::ostream& out, const SimMetrics& metrics) {
    for (const RoundRecord& r : metrics.rounds) {
        out << to_metrics_line(r) << '\n';
    }
    out << to_metrics_line(metrics.summary) << '\n';
}

void StreamMetricsSink::on_round(const RoundRecord& record) {
    out_ << to_metrics_line(record) << '\n';
    out_.flush();
}

void StreamMetricsSink::on_summary(const SummaryRecord& summary) {
    out_ << to_metrics_line(summary) << '\n';
    out_.flush();
}

}  // namespace fgan
