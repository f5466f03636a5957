#include "corrnoise/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "corrnoise/digest.hpp"
#include "corrnoise/errors.hpp"
#include "json.hpp"

namespace corrnoise::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key)) fail(path + "." + key, "unknown key");
}

template <typename T>
T get_number(const json& obj, const std::string& path, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<T>();
}

bool get_bool(const json& obj, const std::string& path, const std::string& key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(path + "." + key, "expected a boolean");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const std::string& key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

corrmodel::CorrelationParams parse_corr_params(const json& obj, const std::string& path) {
    require_keys(obj, path, {"a", "b", "c", "tau", "distanceScale"});
    corrmodel::CorrelationParams p;
    p.a = get_number(obj, path, "a", p.a);
    p.b = get_number(obj, path, "b", p.b);
    p.c = get_number(obj, path, "c", p.c);
    p.tau = get_number(obj, path, "tau", p.tau);
    p.distance_scale = get_number(obj, path, "distanceScale", p.distance_scale);
    return p;
}

noise::NoiseModelSpec parse_noise(const json& obj, const std::string& path) {
    require_keys(obj, path,
                 {"kind", "sigma", "epsilon", "corrParams", "corrRefreshSteps",
                  "backpropThroughSigma", "structured", "maxDenseDim", "psdFloor"});
    noise::NoiseModelSpec spec;
    spec.kind = noise::kind_from_string(get_string(obj, path, "kind", "none"));
    spec.sigma = get_number(obj, path, "sigma", spec.sigma);
    spec.epsilon = get_number(obj, path, "epsilon", spec.epsilon);
    if (obj.contains("corrParams"))
        spec.corr_params = parse_corr_params(obj.at("corrParams"), path + ".corrParams");
    spec.corr_refresh_steps =
        get_number<std::int64_t>(obj, path, "corrRefreshSteps", spec.corr_refresh_steps);
    spec.backprop_through_sigma =
        get_bool(obj, path, "backpropThroughSigma", spec.backprop_through_sigma);
    spec.structured = get_bool(obj, path, "structured", spec.structured);
    spec.max_dense_dim = get_number<std::size_t>(obj, path, "maxDenseDim", spec.max_dense_dim);
    spec.psd_floor = get_number(obj, path, "psdFloor", spec.psd_floor);
    return spec;
}

ModelConfig parse_model(const json& obj, const std::string& path) {
    require_keys(obj, path, {"name", "noise", "firstLayerFilters", "dropout"});
    ModelConfig m;
    if (obj.contains("noise")) m.noise = parse_noise(obj.at("noise"), path + ".noise");
    m.name = get_string(obj, path, "name", noise::to_string(m.noise.kind));
    m.first_layer_filters =
        get_number<std::size_t>(obj, path, "firstLayerFilters", m.first_layer_filters);
    m.dropout = get_bool(obj, path, "dropout", m.dropout);
    return m;
}

nn::OptimizerSpec parse_optimizer(const json& obj, const std::string& path) {
    require_keys(obj, path,
                 {"learningRate", "decayEpochs", "decayFactor", "momentum", "weightDecay",
                  "batchSize", "epochs"});
    nn::OptimizerSpec o;
    o.learning_rate = get_number(obj, path, "learningRate", o.learning_rate);
    if (obj.contains("decayEpochs")) {
        const json& v = obj.at("decayEpochs");
        if (!v.is_array()) fail(path + ".decayEpochs", "expected an array");
        o.decay_epochs.clear();
        for (const json& e : v) {
            if (!e.is_number_unsigned()) fail(path + ".decayEpochs", "expected nonneg integers");
            o.decay_epochs.push_back(e.get<std::size_t>());
        }
    }
    o.decay_factor = get_number(obj, path, "decayFactor", o.decay_factor);
    o.momentum = get_number(obj, path, "momentum", o.momentum);
    o.weight_decay = get_number(obj, path, "weightDecay", o.weight_decay);
    o.batch_size = get_number<std::size_t>(obj, path, "batchSize", o.batch_size);
    o.epochs = get_number<std::size_t>(obj, path, "epochs", o.epochs);
    return o;
}

data::OcclusionSpec parse_occlusion(const json& v, const std::string& path) {
    data::OcclusionSpec spec;
    if (v.is_string()) {
        spec.kind = data::occlusion_kind_from_string(v.get<std::string>());
        return spec;
    }
    require_keys(v, path, {"kind", "blockSize", "centralExtent", "fillValue"});
    spec.kind = data::occlusion_kind_from_string(get_string(v, path, "kind", "centralOcclusion"));
    spec.block_size = get_number<std::size_t>(v, path, "blockSize", spec.block_size);
    spec.central_extent = get_number<std::size_t>(v, path, "centralExtent", spec.central_extent);
    const auto fill = get_number<int>(v, path, "fillValue", spec.fill_value);
    if (fill < 0 || fill > 255) fail(path + ".fillValue", "expected a byte value");
    spec.fill_value = static_cast<std::uint8_t>(fill);
    return spec;
}

json corr_params_json(const corrmodel::CorrelationParams& p) {
    return {{"a", p.a}, {"b", p.b}, {"c", p.c}, {"tau", p.tau}, {"distanceScale", p.distance_scale}};
}

json noise_json(const noise::NoiseModelSpec& n) {
    return {{"kind", noise::to_string(n.kind)},
            {"sigma", n.sigma},
            {"epsilon", n.epsilon},
            {"corrParams", corr_params_json(n.corr_params)},
            {"corrRefreshSteps", n.corr_refresh_steps},
            {"backpropThroughSigma", n.backprop_through_sigma},
            {"structured", n.structured},
            {"maxDenseDim", n.max_dense_dim},
            {"psdFloor", n.psd_floor}};
}

json model_json(const ModelConfig& m) {
    return {{"name", m.name},
            {"noise", noise_json(m.noise)},
            {"firstLayerFilters", m.first_layer_filters},
            {"dropout", m.dropout}};
}

json occlusion_json(const data::OcclusionSpec& o) {
    return {{"kind", data::to_string(o.kind)},
            {"blockSize", o.block_size},
            {"centralExtent", o.central_extent},
            {"fillValue", o.fill_value}};
}

}  // namespace

void ExperimentConfig::validate() const {
    if (precision != 32 && precision != 64)
        throw ConfigError("precision must be 32 or 64");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ConfigError("validationFraction must lie in (0, 1)");
    if (runs < 1) throw ConfigError("runs must be >= 1");
    optimizer.validate();
    for (const ModelConfig& m : model_list()) {
        m.noise.validate();
        if (m.first_layer_filters < 1) throw ConfigError("firstLayerFilters must be >= 1");
        if (m.name.empty()) throw ConfigError("model name must not be empty");
    }
    for (const data::OcclusionSpec& o : occlusion_list()) o.validate();
}

std::vector<ModelConfig> ExperimentConfig::model_list() const {
    if (!models.empty()) return models;
    return {model};
}

std::vector<data::OcclusionSpec> ExperimentConfig::occlusion_list() const {
    if (!occlusions.empty()) return occlusions;
    return data::standard_occlusions();
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    const std::string path = origin.empty() ? "config" : origin;
    require_keys(root, path,
                 {"datasetDir", "seed", "precision", "model", "models", "optimizer",
                  "validationFraction", "occlusions", "outputDir", "runs", "trainSubset",
                  "testSubset"});

    ExperimentConfig cfg;
    cfg.dataset_dir = get_string(root, path, "datasetDir", cfg.dataset_dir);
    cfg.seed = get_number<std::uint64_t>(root, path, "seed", cfg.seed);
    cfg.precision = get_number<int>(root, path, "precision", cfg.precision);
    if (root.contains("model")) cfg.model = parse_model(root.at("model"), path + ".model");
    if (root.contains("models")) {
        const json& v = root.at("models");
        if (!v.is_array()) fail(path + ".models", "expected an array");
        for (std::size_t i = 0; i < v.size(); ++i)
            cfg.models.push_back(parse_model(v[i], path + ".models[" + std::to_string(i) + "]"));
    }
    if (root.contains("optimizer"))
        cfg.optimizer = parse_optimizer(root.at("optimizer"), path + ".optimizer");
    cfg.validation_fraction =
        get_number(root, path, "validationFraction", cfg.validation_fraction);
    if (root.contains("occlusions")) {
        const json& v = root.at("occlusions");
        if (!v.is_array()) fail(path + ".occlusions", "expected an array");
        for (std::size_t i = 0; i < v.size(); ++i)
            cfg.occlusions.push_back(
                parse_occlusion(v[i], path + ".occlusions[" + std::to_string(i) + "]"));
    }
    cfg.output_dir = get_string(root, path, "outputDir", cfg.output_dir);
    cfg.runs = get_number<std::size_t>(root, path, "runs", cfg.runs);
    cfg.train_subset = get_number<std::size_t>(root, path, "trainSubset", cfg.train_subset);
    cfg.test_subset = get_number<std::size_t>(root, path, "testSubset", cfg.test_subset);
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
    json root;
    root["datasetDir"] = cfg.dataset_dir;
    root["seed"] = cfg.seed;
    root["precision"] = cfg.precision;
    root["model"] = model_json(cfg.model);
    json models = json::array();
    for (const ModelConfig& m : cfg.models) models.push_back(model_json(m));
    root["models"] = models;
    json opt;
    opt["learningRate"] = cfg.optimizer.learning_rate;
    opt["decayEpochs"] = cfg.optimizer.decay_epochs;
    opt["decayFactor"] = cfg.optimizer.decay_factor;
    opt["momentum"] = cfg.optimizer.momentum;
    opt["weightDecay"] = cfg.optimizer.weight_decay;
    opt["batchSize"] = cfg.optimizer.batch_size;
    opt["epochs"] = cfg.optimizer.epochs;
    root["optimizer"] = opt;
    root["validationFraction"] = cfg.validation_fraction;
    json occ = json::array();
    for (const data::OcclusionSpec& o : cfg.occlusions) occ.push_back(occlusion_json(o));
    root["occlusions"] = occ;
    root["outputDir"] = cfg.output_dir;
    root["runs"] = cfg.runs;
    root["trainSubset"] = cfg.train_subset;
    root["testSubset"] = cfg.test_subset;
    return root.dump(2);
}

std::string config_digest(const ExperimentConfig& cfg) {
    return digest::sha256_hex(canonical_config_json(cfg));
}

}  // namespace corrnoise::config
