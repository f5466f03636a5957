#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corrnoise/nn.hpp"
#include "corrnoise/noise.hpp"
#include "corrnoise/occlusion.hpp"

namespace corrnoise::config {

struct ModelConfig {
    std::string name = "Baseline";
    noise::NoiseModelSpec noise;
    std::size_t first_layer_filters = 10;
    bool dropout = true;
};

struct ExperimentConfig {
    std::string dataset_dir;
    std::uint64_t seed = 1;
    int precision = 32;  // 32 or 64
    ModelConfig model;
    std::vector<ModelConfig> models;  // experiment: empty means {model}
    nn::OptimizerSpec optimizer;
    double validation_fraction = 0.1;
    std::vector<data::OcclusionSpec> occlusions;  // empty means the standard six
    std::string output_dir = "out";
    std::size_t runs = 1;
    std::size_t train_subset = 0;  // 0 = all
    std::size_t test_subset = 0;   // 0 = all

    void validate() const;
    std::vector<ModelConfig> model_list() const;
    std::vector<data::OcclusionSpec> occlusion_list() const;
};

// Strict parse: unknown keys anywhere are hard errors, reported with their
// field path. The two entry points differ only in where the text comes from.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// Canonical serialization (sorted keys, fixed formatting); the config digest
// is the SHA-256 of this string, so reruns hash identically.
std::string canonical_config_json(const ExperimentConfig& cfg);
std::string config_digest(const ExperimentConfig& cfg);

}  // namespace corrnoise::config
