#include "framing/checkpoint.hpp"

#include "framing/errors.hpp"

#include <fstream>

namespace framing::models {

using nlohmann::json;

namespace {

json tasks_to_json(const std::vector<TaskSpec>& tasks) {
    json arr = json::array();
    for (const auto& t : tasks) arr.push_back({{"name", t.name}, {"n_classes", t.n_classes}, {"weight", t.weight}});
    return arr;
}

std::vector<TaskSpec> tasks_from_json(const json& j) {
    std::vector<TaskSpec> out;
    for (const auto& t : j)
        out.push_back({t.at("name").get<std::string>(), t.at("n_classes").get<std::size_t>(), t.at("weight").get<double>()});
    return out;
}

json config_to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"alpha", c.alpha},
            {"schedule", to_string(c.schedule)},
            {"encoder", c.encoder == EncoderKind::Projection ? "projection" : "identity"},
            {"hidden", c.hidden}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.alpha = j.at("alpha").get<double>();
    c.schedule = schedule_from_string(j.at("schedule").get<std::string>());
    c.encoder = j.at("encoder").get<std::string>() == "identity" ? EncoderKind::Identity : EncoderKind::Projection;
    c.hidden = j.at("hidden").get<std::size_t>();
    return c;
}

json network_to_json(const Network& net, const TrainHistory* history) {
    const auto& s = net.shape();
    json j{{"encoder", s.encoder == EncoderKind::Projection ? "projection" : "identity"},
           {"input_dim", s.input_dim},
           {"hidden", s.hidden},
           {"tasks", s.tasks},
           {"head_classes", s.head_classes},
           {"lp_classes", s.lp_classes},
           {"params", std::vector<double>(net.params().begin(), net.params().end())}};
    if (history) {
        json epochs = json::array();
        for (const auto& e : history->epochs)
            epochs.push_back({{"mean_loss", e.mean_loss}, {"dev_score", e.dev_score ? json(*e.dev_score) : json(nullptr)}});
        j["best_epoch"] = history->best_epoch;
        j["epochs"] = std::move(epochs);
    }
    return j;
}

Network network_from_json(const json& j) {
    NetworkShape s;
    s.encoder = j.at("encoder").get<std::string>() == "identity" ? EncoderKind::Identity : EncoderKind::Projection;
    s.input_dim = j.at("input_dim").get<std::size_t>();
    s.hidden = j.at("hidden").get<std::size_t>();
    s.tasks = j.at("tasks").get<std::vector<std::size_t>>();
    s.head_classes = j.at("head_classes").get<std::vector<std::size_t>>();
    s.lp_classes = j.at("lp_classes").get<std::size_t>();
    Network net(s);
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != net.param_count()) throw ParseError("checkpoint parameter count does not match its shape");
    std::copy(params.begin(), params.end(), net.params().begin());
    return net;
}

std::optional<TrainHistory> history_from_json(const json& j) {
    if (!j.contains("epochs")) return std::nullopt;
    TrainHistory h;
    h.best_epoch = j.at("best_epoch").get<std::size_t>();
    for (const auto& e : j.at("epochs")) {
        EpochRecord r;
        r.mean_loss = e.at("mean_loss").get<double>();
        if (!e.at("dev_score").is_null()) r.dev_score = e.at("dev_score").get<double>();
        h.epochs.push_back(r);
    }
    return h;
}

}  // namespace

TaskLabels predict(const TrainedModel& model, const features::FeatureMatrix& x) {
    if (const auto* mt = std::get_if<MultiTaskModel>(&model)) return predict_multitask(*mt, x);
    const auto& bundle = std::get<SvmBundle>(model);
    TaskLabels out;
    for (const auto& m : bundle.per_task) out.push_back(predict(m, x));
    return out;
}

json to_json(const TrainedModel& model) {
    if (const auto* mt = std::get_if<MultiTaskModel>(&model)) {
        json nets = json::array();
        for (std::size_t i = 0; i < mt->networks.size(); ++i)
            nets.push_back(network_to_json(mt->networks[i], i < mt->histories.size() ? &mt->histories[i] : nullptr));
        json lp = nullptr;
        if (mt->lp_map) lp = mt->lp_map->combos();
        return {{"kind", "neural"},
                {"regime", to_string(mt->regime)},
                {"tasks", tasks_to_json(mt->tasks)},
                {"train_config", config_to_json(mt->config)},
                {"lp_combos", lp},
                {"networks", nets}};
    }
    const auto& bundle = std::get<SvmBundle>(model);
    json machines = json::array();
    for (const auto& m : bundle.per_task)
        machines.push_back({{"n_features", m.n_features},
                            {"n_classes", m.n_classes},
                            {"c", m.c},
                            {"machine_class", m.machine_class},
                            {"weights", m.weights},
                            {"bias", m.bias}});
    return {{"kind", "svm"}, {"regime", "svm"}, {"tasks", tasks_to_json(bundle.tasks)}, {"machines", machines}};
}

TrainedModel model_from_json(const json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "svm") {
            SvmBundle b;
            b.tasks = tasks_from_json(j.at("tasks"));
            for (const auto& m : j.at("machines")) {
                LinearSvmModel svm;
                svm.n_features = m.at("n_features").get<std::size_t>();
                svm.n_classes = m.at("n_classes").get<std::size_t>();
                svm.c = m.at("c").get<double>();
                svm.machine_class = m.at("machine_class").get<std::vector<int>>();
                svm.weights = m.at("weights").get<std::vector<std::vector<double>>>();
                svm.bias = m.at("bias").get<std::vector<double>>();
                b.per_task.push_back(std::move(svm));
            }
            return b;
        }
        if (kind != "neural") throw ParseError("unknown checkpoint kind '" + kind + "'");
        MultiTaskModel mt;
        mt.regime = regime_from_string(j.at("regime").get<std::string>());
        mt.tasks = tasks_from_json(j.at("tasks"));
        mt.config = config_from_json(j.at("train_config"));
        if (!j.at("lp_combos").is_null()) {
            LabelPowersetMap map;
            for (const auto& combo : j.at("lp_combos")) map.add(combo.get<std::vector<int>>());
            mt.lp_map = std::move(map);
        }
        for (const auto& n : j.at("networks")) {
            mt.networks.push_back(network_from_json(n));
            if (auto h = history_from_json(n)) mt.histories.push_back(std::move(*h));
        }
        return mt;
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    json j{{"format", "framing-checkpoint"},
           {"version", kCheckpointVersion},
           {"vocab_hash", checkpoint.vocab_hash},
           {"metadata", checkpoint.metadata},
           {"model", to_json(checkpoint.model)}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<std::string>& expected_vocab_hash) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "framing-checkpoint") throw ParseError(path.string() + ": not a model checkpoint");
    if (j.value("version", 0) != kCheckpointVersion)
        throw ParseError(path.string() + ": unsupported checkpoint version");
    Checkpoint cp;
    cp.vocab_hash = j.at("vocab_hash").get<std::string>();
    if (expected_vocab_hash && *expected_vocab_hash != cp.vocab_hash)
        throw ValidationError("vocab_hash", "checkpoint was trained on feature space " + cp.vocab_hash +
                                                " but the supplied one hashes to " + *expected_vocab_hash);
    cp.metadata = j.value("metadata", json::object());
    cp.model = model_from_json(j.at("model"));
    return cp;
}

}  // namespace framing::models
