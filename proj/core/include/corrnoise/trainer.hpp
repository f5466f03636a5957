#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "corrnoise/cifar.hpp"
#include "corrnoise/config.hpp"
#include "corrnoise/occlusion.hpp"

namespace corrnoise::train {

// Per-run datasets. The training pool is shuffled and subset before the
// validation split, and the normalization statistics come from the final
// training portion only.
struct DataBundle {
    std::vector<data::ImageRecord> train;
    std::vector<data::ImageRecord> val;
    std::vector<data::ImageRecord> test;
    data::ChannelStats stats;
};

std::uint64_t run_seed_for(std::uint64_t seed, std::size_t run_index);

DataBundle prepare_data(const config::ExperimentConfig& cfg, std::uint64_t run_seed);

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double lr = 0;
    double train_loss = 0;
    double train_acc = 0;
    double val_loss = 0;
    double val_acc = 0;
};

struct RunResult {
    std::string model_name;
    std::size_t run_index = 0;
    std::uint64_t run_seed = 0;
    std::vector<EpochLog> epochs;
    std::size_t best_epoch = 0;
    double best_val_loss = 0;
    std::string best_checkpoint;
    std::string last_checkpoint;
    std::string log_path;
};

using ProgressFn = std::function<void(const std::string&)>;

// One full training run. Writes train_log.csv, best.ckpt (lowest validation
// loss), and last.ckpt into run_dir. Deterministic given the config and run
// index: reruns produce byte-identical artifacts.
RunResult train_run(const config::ExperimentConfig& cfg, const config::ModelConfig& model,
                    std::size_t run_index, const DataBundle& data, const std::string& run_dir,
                    const ProgressFn& progress = {});

struct EvalSetResult {
    std::string name;
    double accuracy = 0;  // fraction in [0, 1]
    std::array<std::size_t, data::kNumClasses> per_class_correct{};
    std::array<std::size_t, data::kNumClasses> per_class_total{};
};

struct EvalReport {
    std::string model_name;
    std::vector<EvalSetResult> sets;  // clean test set first, then occlusions
};

// Rebuilds the network from the config embedded in the checkpoint and scores
// it on the clean records plus one occluded variant per spec. Occlusion is
// applied to raw bytes; standardization uses the checkpoint's stored stats.
EvalReport evaluate_checkpoint(const std::string& ckpt_path,
                               const std::vector<data::ImageRecord>& test,
                               const std::vector<data::OcclusionSpec>& occlusions);

struct ExperimentResult {
    std::vector<std::string> model_names;
    std::vector<std::string> set_names;                  // clean first
    std::vector<std::vector<std::vector<double>>> runs;  // [model][run][set] accuracy
    std::vector<std::vector<double>> mean;               // [model][set]
    std::vector<std::vector<double>> sd;                 // sample sd; 0 for one run
};

// Trains every configured model for the configured number of runs, evaluates
// each run's best checkpoint, and writes <output_dir>/results.csv.
ExperimentResult run_experiment(const config::ExperimentConfig& cfg,
                                const ProgressFn& progress = {});

void write_results_csv(const std::string& path, const ExperimentResult& result,
                       const std::string& digest, std::uint64_t seed);

}  // namespace corrnoise::train
