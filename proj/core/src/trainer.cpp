#include "corrnoise/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>

#include "corrnoise/checkpoint.hpp"
#include "corrnoise/nn.hpp"
#include "corrnoise/version.hpp"

namespace corrnoise::train {

namespace {

// Stream layout per run: child 0 seeds parameter init, child 1 is split again
// per optimizer step (dropout and noise), child 2 per epoch (shuffling). Data
// preparation uses tags 3 (subset shuffle) and 4 (validation split) so it is
// independent of the training streams.
constexpr std::uint64_t kInitChild = 0;
constexpr std::uint64_t kStepChild = 1;
constexpr std::uint64_t kShuffleChild = 2;
constexpr std::uint64_t kSubsetTag = 3;
constexpr std::uint64_t kValSplitTag = 4;

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string artifact_header(const std::string& digest, std::uint64_t seed) {
    std::string line = "# version=";
    line += version_string();
    line += " config_digest=" + digest + " seed=" + std::to_string(seed) + "\n";
    return line;
}

template <typename T>
std::size_t count_correct(const Tensor<T>& logits, const std::vector<int>& labels,
                          EvalSetResult* per_class = nullptr) {
    const std::size_t b = logits.extent(0);
    const std::size_t c = logits.extent(1);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < c; ++j)
            if (logits(i, j) > logits(i, arg)) arg = j;
        const bool hit = static_cast<int>(arg) == labels[i];
        correct += hit ? 1 : 0;
        if (per_class != nullptr) {
            per_class->per_class_total[static_cast<std::size_t>(labels[i])] += 1;
            if (hit) per_class->per_class_correct[static_cast<std::size_t>(labels[i])] += 1;
        }
    }
    return correct;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

// Deterministic batched scoring in evaluation mode. Returns mean loss; fills
// accuracy (and per-class tallies) into the result.
template <typename T>
double eval_pass(nn::Network<T>& net, const std::vector<data::ImageRecord>& records,
                 const data::ChannelStats& stats, std::size_t batch_size, EvalSetResult& out) {
    const std::vector<std::size_t> idx = iota_indices(records.size());
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < records.size(); start += batch_size) {
        const std::size_t bsz = std::min(batch_size, records.size() - start);
        const std::span<const std::size_t> part(idx.data() + start, bsz);
        const Tensor<T> input = data::to_tensor<T>(records, part, stats);
        const std::vector<int> labels = data::to_labels(records, part);
        const Tensor<T> logits = net.forward(input, false, nullptr, nullptr);
        loss_sum += net.loss(logits, labels, nullptr) * static_cast<double>(bsz);
        correct += count_correct(logits, labels, &out);
    }
    out.accuracy = records.empty()
                       ? 0.0
                       : static_cast<double>(correct) / static_cast<double>(records.size());
    return records.empty() ? 0.0 : loss_sum / static_cast<double>(records.size());
}

template <typename T>
checkpoint::Checkpoint make_checkpoint(const config::ExperimentConfig& cfg,
                                       const config::ModelConfig& model, std::uint64_t run_seed,
                                       const RandomStream& root, const DataBundle& data,
                                       const nn::Network<T>& net,
                                       const nn::ParamSet<T>& velocity, std::uint64_t epoch,
                                       std::uint64_t step, double best_val_loss,
                                       std::uint64_t best_epoch) {
    checkpoint::Checkpoint ck;
    ck.precision = cfg.precision;
    ck.seed = cfg.seed;
    ck.run_seed = run_seed;
    ck.epoch = epoch;
    ck.step = step;
    ck.best_val_loss = best_val_loss;
    ck.best_epoch = best_epoch;
    ck.config_json = config::canonical_config_json(cfg);
    ck.config_digest = config::config_digest(cfg);
    ck.model_name = model.name;
    ck.stats = data.stats;
    ck.rng_state = root.save_state();
    ck.params = checkpoint::pack_params(net.params());
    ck.velocity = checkpoint::pack_params(velocity);
    return ck;
}

template <typename T>
RunResult train_run_impl(const config::ExperimentConfig& cfg, const config::ModelConfig& model,
                         std::size_t run_index, const DataBundle& data,
                         const std::string& run_dir, const ProgressFn& progress) {
    const nn::OptimizerSpec& opt = cfg.optimizer;
    const std::uint64_t run_seed = run_seed_for(cfg.seed, run_index);
    const RandomStream root(run_seed);

    nn::Network<T> net(nn::build_allconvnet(model.first_layer_filters, model.noise,
                                            model.dropout));
    RandomStream init = root.split(kInitChild);
    net.init_params(init);
    nn::ParamSet<T> grads = net.make_gradients();
    nn::ParamSet<T> velocity = net.make_velocity();
    nn::Tape<T> tape;

    std::filesystem::create_directories(run_dir);
    RunResult result;
    result.model_name = model.name;
    result.run_index = run_index;
    result.run_seed = run_seed;
    result.best_checkpoint = run_dir + "/best.ckpt";
    result.last_checkpoint = run_dir + "/last.ckpt";
    result.log_path = run_dir + "/train_log.csv";
    result.best_val_loss = std::numeric_limits<double>::infinity();

    const std::string digest = config::config_digest(cfg);
    std::ofstream log(result.log_path, std::ios::binary);
    if (!log) throw DataError("cannot open " + result.log_path + " for writing");
    log << artifact_header(digest, cfg.seed);
    log << "epoch,lr,train_loss,train_acc,val_loss,val_acc\n";

    const std::size_t n = data.train.size();
    if (n == 0) throw DataError("training set is empty");
    std::uint64_t step = 0;
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        const double lr = opt.lr_at_epoch(epoch);
        RandomStream shuffle = root.split(kShuffleChild).split(epoch);
        const std::vector<std::size_t> order = data::shuffled_indices(n, shuffle);

        double loss_sum = 0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < n; start += opt.batch_size) {
            const std::size_t bsz = std::min(opt.batch_size, n - start);
            const std::span<const std::size_t> idx(order.data() + start, bsz);
            const Tensor<T> input = data::to_tensor<T>(data.train, idx, data.stats);
            const std::vector<int> labels = data::to_labels(data.train, idx);

            RandomStream step_stream = root.split(kStepChild).split(step);
            const Tensor<T> logits =
                net.forward(input, true, &step_stream, &tape,
                            static_cast<std::int64_t>(step));
            const double batch_loss = net.loss(logits, labels, &tape);
            loss_sum += batch_loss * static_cast<double>(bsz);
            correct += count_correct(logits, labels);

            net.backward(tape, grads);
            nn::sgd_step(net.params(), grads, velocity, lr, opt.momentum, opt.weight_decay);
            ++step;
        }

        EvalSetResult val_metrics;
        const double val_loss =
            data.val.empty() ? 0.0
                             : eval_pass(net, data.val, data.stats, opt.batch_size, val_metrics);

        EpochLog el;
        el.epoch = epoch + 1;
        el.lr = lr;
        el.train_loss = loss_sum / static_cast<double>(n);
        el.train_acc = static_cast<double>(correct) / static_cast<double>(n);
        el.val_loss = val_loss;
        el.val_acc = val_metrics.accuracy;
        result.epochs.push_back(el);

        log << el.epoch << ',' << fmt("%.8g", el.lr) << ',' << fmt("%.8f", el.train_loss) << ','
            << fmt("%.6f", el.train_acc) << ',' << fmt("%.8f", el.val_loss) << ','
            << fmt("%.6f", el.val_acc) << '\n';
        log.flush();

        if (data.val.empty() || val_loss < result.best_val_loss) {
            result.best_val_loss = data.val.empty() ? el.train_loss : val_loss;
            result.best_epoch = el.epoch;
            checkpoint::save_checkpoint(
                result.best_checkpoint,
                make_checkpoint(cfg, model, run_seed, root, data, net, velocity, el.epoch, step,
                                result.best_val_loss, result.best_epoch));
        }
        checkpoint::save_checkpoint(
            result.last_checkpoint,
            make_checkpoint(cfg, model, run_seed, root, data, net, velocity, el.epoch, step,
                            result.best_val_loss, result.best_epoch));

        if (progress)
            progress(model.name + " run " + std::to_string(run_index + 1) + " epoch " +
                     std::to_string(el.epoch) + "/" + std::to_string(opt.epochs) +
                     " lr=" + fmt("%.4g", el.lr) + " train_loss=" + fmt("%.4f", el.train_loss) +
                     " val_loss=" + fmt("%.4f", el.val_loss) +
                     " val_acc=" + fmt("%.4f", el.val_acc));
    }
    return result;
}

template <typename T>
EvalReport evaluate_impl(const checkpoint::Checkpoint& ck, const config::ExperimentConfig& cfg,
                         const config::ModelConfig& model,
                         const std::vector<data::ImageRecord>& test,
                         const std::vector<data::OcclusionSpec>& occlusions) {
    nn::Network<T> net(nn::build_allconvnet(model.first_layer_filters, model.noise,
                                            model.dropout));
    checkpoint::unpack_params(ck.params, net.params());

    EvalReport report;
    report.model_name = ck.model_name;

    EvalSetResult clean;
    clean.name = "Test Set";
    eval_pass(net, test, ck.stats, cfg.optimizer.batch_size, clean);
    report.sets.push_back(std::move(clean));

    for (const data::OcclusionSpec& spec : occlusions) {
        EvalSetResult set;
        set.name = data::display_name(spec.kind);
        const std::vector<data::ImageRecord> occluded = data::occlude_all(test, spec);
        eval_pass(net, occluded, ck.stats, cfg.optimizer.batch_size, set);
        report.sets.push_back(std::move(set));
    }
    return report;
}

double sample_sd(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double acc = 0;
    for (const double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace

std::uint64_t run_seed_for(std::uint64_t seed, std::size_t run_index) {
    return derive_seed(seed, 100 + run_index);
}

DataBundle prepare_data(const config::ExperimentConfig& cfg, std::uint64_t run_seed) {
    auto [train_full, test_full] = data::load_cifar10(cfg.dataset_dir);

    RandomStream subset_stream(derive_seed(run_seed, kSubsetTag));
    const std::vector<std::size_t> order = data::shuffled_indices(train_full.size(),
                                                                  subset_stream);
    std::size_t pool_size = train_full.size();
    if (cfg.train_subset > 0) {
        if (cfg.train_subset > train_full.size())
            throw DataError("train subset exceeds available records");
        pool_size = cfg.train_subset;
    }
    std::vector<data::ImageRecord> pool;
    pool.reserve(pool_size);
    for (std::size_t i = 0; i < pool_size; ++i) pool.push_back(train_full[order[i]]);

    DataBundle bundle;
    auto [train, val] =
        data::split_validation(pool, cfg.validation_fraction, derive_seed(run_seed, kValSplitTag));
    bundle.train = std::move(train);
    bundle.val = std::move(val);
    bundle.stats = data::compute_channel_stats(bundle.train);

    if (cfg.test_subset > 0) {
        if (cfg.test_subset > test_full.size())
            throw DataError("test subset exceeds available records");
        test_full.resize(cfg.test_subset);
    }
    bundle.test = std::move(test_full);
    return bundle;
}

RunResult train_run(const config::ExperimentConfig& cfg, const config::ModelConfig& model,
                    std::size_t run_index, const DataBundle& data, const std::string& run_dir,
                    const ProgressFn& progress) {
    if (cfg.precision == 64) return train_run_impl<double>(cfg, model, run_index, data, run_dir,
                                                           progress);
    return train_run_impl<float>(cfg, model, run_index, data, run_dir, progress);
}

EvalReport evaluate_checkpoint(const std::string& ckpt_path,
                               const std::vector<data::ImageRecord>& test,
                               const std::vector<data::OcclusionSpec>& occlusions) {
    const checkpoint::Checkpoint ck = checkpoint::load_checkpoint(ckpt_path);
    const config::ExperimentConfig cfg = config::parse_config_text(ck.config_json, ckpt_path);

    const std::vector<config::ModelConfig> models = cfg.model_list();
    const config::ModelConfig* model = nullptr;
    for (const auto& m : models)
        if (m.name == ck.model_name) model = &m;
    if (model == nullptr)
        throw DataError("checkpoint model '" + ck.model_name + "' is not in its config");

    if (ck.precision == 64) return evaluate_impl<double>(ck, cfg, *model, test, occlusions);
    return evaluate_impl<float>(ck, cfg, *model, test, occlusions);
}

ExperimentResult run_experiment(const config::ExperimentConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    const std::vector<config::ModelConfig> models = cfg.model_list();
    const std::vector<data::OcclusionSpec> occlusions = cfg.occlusion_list();

    ExperimentResult result;
    result.set_names.push_back("Test Set");
    for (const auto& spec : occlusions) result.set_names.push_back(data::display_name(spec.kind));

    for (const config::ModelConfig& model : models) {
        result.model_names.push_back(model.name);
        std::vector<std::vector<double>> run_rows;
        for (std::size_t run = 0; run < cfg.runs; ++run) {
            const std::uint64_t run_seed = run_seed_for(cfg.seed, run);
            const DataBundle data = prepare_data(cfg, run_seed);
            const std::string run_dir =
                cfg.output_dir + "/" + model.name + "/run" + std::to_string(run + 1);
            const RunResult rr = train_run(cfg, model, run, data, run_dir, progress);
            const EvalReport report =
                evaluate_checkpoint(rr.best_checkpoint, data.test, occlusions);

            std::vector<double> row;
            for (const auto& set : report.sets) row.push_back(set.accuracy);
            run_rows.push_back(std::move(row));
        }
        result.runs.push_back(std::move(run_rows));
    }

    for (const auto& run_rows : result.runs) {
        std::vector<double> means(result.set_names.size(), 0.0);
        std::vector<double> sds(result.set_names.size(), 0.0);
        for (std::size_t s = 0; s < result.set_names.size(); ++s) {
            std::vector<double> xs;
            for (const auto& row : run_rows) xs.push_back(row[s]);
            double mean = 0;
            for (const double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            means[s] = mean;
            sds[s] = sample_sd(xs, mean);
        }
        result.mean.push_back(std::move(means));
        result.sd.push_back(std::move(sds));
    }

    std::filesystem::create_directories(cfg.output_dir);
    write_results_csv(cfg.output_dir + "/results.csv", result, config::config_digest(cfg),
                      cfg.seed);
    return result;
}

void write_results_csv(const std::string& path, const ExperimentResult& result,
                       const std::string& digest, std::uint64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << artifact_header(digest, seed);
    out << "Model";
    for (const std::string& name : result.set_names)
        out << ',' << name << " mean," << name << " sd";
    out << '\n';
    for (std::size_t m = 0; m < result.model_names.size(); ++m) {
        out << result.model_names[m];
        for (std::size_t s = 0; s < result.set_names.size(); ++s)
            out << ',' << fmt("%.2f", 100.0 * result.mean[m][s]) << ','
                << fmt("%.2f", 100.0 * result.sd[m][s]);
        out << '\n';
    }
}

}  // namespace corrnoise::train
