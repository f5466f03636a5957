#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "corrnoise/checkpoint.hpp"
#include "corrnoise/cifar.hpp"
#include "corrnoise/config.hpp"
#include "corrnoise/corrmodel.hpp"
#include "corrnoise/digest.hpp"
#include "corrnoise/errors.hpp"
#include "corrnoise/occlusion.hpp"
#include "corrnoise/sampler.hpp"
#include "corrnoise/trainer.hpp"
#include "corrnoise/version.hpp"

namespace {

using namespace corrnoise;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

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

std::ofstream open_out(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    return out;
}

// Shared flag block: --config plus the overrides every run command honors.
struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    int precision = 0;

    void attach(CLI::App* cmd, bool config_required) {
        auto* c = cmd->add_option("--config", config_path, "experiment config file (JSON)");
        if (config_required) c->required();
        cmd->add_option("--seed", seed, "override the config seed")
            ->each([this](const std::string&) { seed_set = true; });
        cmd->add_option("--out", out_dir, "override the config output directory");
        cmd->add_option("--precision", precision, "floating point width")
            ->check(CLI::IsMember({32, 64}));
    }

    config::ExperimentConfig load() const {
        config::ExperimentConfig cfg = config_path.empty()
                                           ? config::parse_config_text("{}", "<default>")
                                           : config::parse_config_file(config_path);
        if (seed_set) cfg.seed = seed;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (precision != 0) cfg.precision = precision;
        cfg.validate();
        return cfg;
    }
};

void print_run(const train::RunResult& rr) {
    std::cout << rr.model_name << " run " << rr.run_index + 1 << ": best epoch " << rr.best_epoch
              << ", val loss " << fmt("%.4f", rr.best_val_loss) << "\n";
    std::cout << "  log:  " << rr.log_path << "\n";
    std::cout << "  best: " << rr.best_checkpoint << "\n";
}

int cmd_train(const CommonOpts& common, std::size_t run_index) {
    const config::ExperimentConfig cfg = common.load();
    const std::uint64_t run_seed = train::run_seed_for(cfg.seed, run_index);
    const train::DataBundle data = train::prepare_data(cfg, run_seed);
    const config::ModelConfig model = cfg.model_list().front();
    const std::string run_dir =
        cfg.output_dir + "/" + model.name + "/run" + std::to_string(run_index + 1);
    const train::RunResult rr = train::train_run(
        cfg, model, run_index, data, run_dir,
        [](const std::string& line) { std::cout << line << "\n"; });
    print_run(rr);
    return 0;
}

int cmd_experiment(const CommonOpts& common) {
    const config::ExperimentConfig cfg = common.load();
    const train::ExperimentResult result = train::run_experiment(
        cfg, [](const std::string& line) { std::cout << line << "\n"; });
    std::cout << "results: " << cfg.output_dir << "/results.csv\n";
    for (std::size_t m = 0; m < result.model_names.size(); ++m) {
        std::cout << result.model_names[m] << ":";
        for (std::size_t s = 0; s < result.set_names.size(); ++s)
            std::cout << " " << result.set_names[s] << " "
                      << fmt("%.2f", 100.0 * result.mean[m][s]) << "+-"
                      << fmt("%.2f", 100.0 * result.sd[m][s]);
        std::cout << "\n";
    }
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir, std::size_t test_subset,
             const std::string& out_dir, bool per_class,
             const std::vector<std::string>& occlusion_names) {
    const checkpoint::Checkpoint ck = checkpoint::load_checkpoint(ckpt_path);
    config::ExperimentConfig cfg = config::parse_config_text(ck.config_json, ckpt_path);
    if (!data_dir.empty()) cfg.dataset_dir = data_dir;
    if (test_subset != 0) cfg.test_subset = test_subset;

    auto [train_recs, test_recs] = data::load_cifar10(cfg.dataset_dir);
    (void)train_recs;
    if (cfg.test_subset != 0) {
        if (cfg.test_subset > test_recs.size())
            throw DataError("test subset exceeds available records");
        test_recs.resize(cfg.test_subset);
    }

    std::vector<data::OcclusionSpec> occlusions;
    if (occlusion_names.empty()) {
        occlusions = cfg.occlusion_list();
    } else {
        for (const std::string& name : occlusion_names)
            occlusions.push_back({data::occlusion_kind_from_string(name)});
    }

    const train::EvalReport report = train::evaluate_checkpoint(ckpt_path, test_recs, occlusions);

    const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
    const std::string header = artifact_header(ck.config_digest, ck.seed);
    {
        auto out = open_out(dir + "/eval.csv");
        out << header << "Model";
        for (const auto& s : report.sets) out << ',' << s.name;
        out << '\n' << report.model_name;
        for (const auto& s : report.sets) out << ',' << fmt("%.2f", 100.0 * s.accuracy);
        out << '\n';
    }
    for (const auto& s : report.sets)
        std::cout << s.name << ": " << fmt("%.2f", 100.0 * s.accuracy) << "%\n";

    if (per_class) {
        auto out = open_out(dir + "/per_class.csv");
        out << header << "Class";
        for (const auto& s : report.sets) out << ',' << s.name;
        out << '\n';
        for (std::size_t c = 0; c < data::kNumClasses; ++c) {
            out << data::kClassNames[c];
            for (const auto& s : report.sets) {
                const double acc = s.per_class_total[c] == 0
                                       ? 0.0
                                       : static_cast<double>(s.per_class_correct[c]) /
                                             static_cast<double>(s.per_class_total[c]);
                out << ',' << fmt("%.2f", 100.0 * acc);
            }
            out << '\n';
        }
        std::cout << "per-class table: " << dir << "/per_class.csv\n";
    }
    return 0;
}

int cmd_occlude(const std::string& data_dir, const std::string& kind_name, std::size_t block,
                std::size_t extent, unsigned fill, const std::string& out_dir) {
    if (fill > 255) throw ConfigError("fill value must be a byte");
    data::OcclusionSpec spec;
    spec.kind = data::occlusion_kind_from_string(kind_name);
    spec.block_size = block;
    spec.central_extent = extent;
    spec.fill_value = static_cast<std::uint8_t>(fill);
    spec.validate();

    const std::string src = data_dir + "/test_batch.bin";
    const auto records = data::load_batch_file(src, data::kBatchRecords);
    const auto occluded = data::occlude_all(records, spec);

    std::filesystem::create_directories(out_dir);
    const std::string out_bin = out_dir + "/test_batch_" + kind_name + ".bin";
    data::save_batch_file(out_bin, occluded);

    const std::string source_digest = digest::sha256_file_hex(src);
    auto manifest = open_out(out_dir + "/test_batch_" + kind_name + ".manifest");
    manifest << artifact_header(source_digest, 0);
    manifest << "kind=" << kind_name << "\n";
    manifest << "blockSize=" << spec.block_size << "\n";
    manifest << "centralExtent=" << spec.central_extent << "\n";
    manifest << "fillValue=" << static_cast<unsigned>(spec.fill_value) << "\n";
    manifest << "source=" << src << "\n";
    manifest << "sourceDigest=" << source_digest << "\n";
    manifest << "records=" << occluded.size() << "\n";
    std::cout << "wrote " << out_bin << " (" << occluded.size() << " records)\n";
    return 0;
}

int cmd_heatmap(double d0, double d1, double k0, double k1, std::size_t steps,
                const std::string& out_dir) {
    if (steps < 2) throw ConfigError("heatmap needs at least 2 grid steps");
    if (!(d1 > d0) || !(k1 > k0)) throw ConfigError("heatmap ranges must be increasing");
    const corrmodel::CorrelationParams params;

    const std::string param_str = "heatmap d=[" + fmt("%.17g", d0) + "," + fmt("%.17g", d1) +
                                  "] k=[" + fmt("%.17g", k0) + "," + fmt("%.17g", k1) +
                                  "] steps=" + std::to_string(steps);
    const std::string dig = digest::sha256_hex(param_str);

    Tensor<double> grid({steps, steps});
    for (std::size_t i = 0; i < steps; ++i) {
        const double d = d0 + (d1 - d0) * static_cast<double>(i) / static_cast<double>(steps - 1);
        for (std::size_t j = 0; j < steps; ++j) {
            const double k =
                k0 + (k1 - k0) * static_cast<double>(j) / static_cast<double>(steps - 1);
            grid(i, j) = corrmodel::pairwise_correlation(d, k, params);
        }
    }

    std::filesystem::create_directories(out_dir);
    {
        auto out = open_out(out_dir + "/heatmap.csv");
        out << artifact_header(dig, 0) << "d\\k";
        for (std::size_t j = 0; j < steps; ++j)
            out << ',' << fmt("%.6f", k0 + (k1 - k0) * static_cast<double>(j) /
                                               static_cast<double>(steps - 1));
        out << '\n';
        for (std::size_t i = 0; i < steps; ++i) {
            out << fmt("%.6f",
                       d0 + (d1 - d0) * static_cast<double>(i) / static_cast<double>(steps - 1));
            for (std::size_t j = 0; j < steps; ++j) out << ',' << fmt("%.9f", grid(i, j));
            out << '\n';
        }
    }
    {
        double lo = grid(0, 0), hi = grid(0, 0);
        for (const double v : grid.data()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double span = hi > lo ? hi - lo : 1.0;
        auto out = open_out(out_dir + "/heatmap.pgm");
        out << "P2\n# " << param_str << " digest=" << dig << "\n"
            << steps << ' ' << steps << "\n255\n";
        for (std::size_t i = 0; i < steps; ++i) {
            for (std::size_t j = 0; j < steps; ++j) {
                const int px = static_cast<int>(std::lround(255.0 * (grid(i, j) - lo) / span));
                out << px << (j + 1 == steps ? '\n' : ' ');
            }
        }
    }
    std::cout << "wrote " << out_dir << "/heatmap.csv and heatmap.pgm\n";
    return 0;
}

struct CheckRow {
    std::string name;
    double value;
    double threshold;
    bool less_equal;  // pass when value <= threshold (else value >= threshold)
    bool pass() const { return less_equal ? value <= threshold : value >= threshold; }
};

int write_check_report(const std::string& path, const std::string& dig, std::uint64_t seed,
                       const std::vector<CheckRow>& rows) {
    auto out = open_out(path);
    out << artifact_header(dig, seed) << "check,value,threshold,comparison,pass\n";
    bool all_pass = true;
    for (const auto& r : rows) {
        out << r.name << ',' << fmt("%.9g", r.value) << ',' << fmt("%.9g", r.threshold) << ','
            << (r.less_equal ? "<=" : ">=") << ',' << (r.pass() ? "pass" : "FAIL") << '\n';
        all_pass &= r.pass();
        std::cout << (r.pass() ? "  pass  " : "  FAIL  ") << r.name << " = "
                  << fmt("%.6g", r.value) << (r.less_equal ? " <= " : " >= ")
                  << fmt("%.6g", r.threshold) << "\n";
    }
    std::cout << "report: " << path << "\n";
    return all_pass ? 0 : kExitNumerical;
}

Tensor<double> toy_kernels(std::size_t maps, std::size_t len, std::uint64_t seed) {
    RandomStream stream(derive_seed(seed, 7001));
    Tensor<double> kernels({maps, len});
    for (std::size_t f = 0; f < maps; ++f) {
        auto row = kernels.slice0(f);
        double norm2 = 0;
        for (double& v : row) {
            v = stream.normal();
            norm2 += v * v;
        }
        for (double& v : row) v /= std::sqrt(norm2);
    }
    return kernels;
}

int cmd_corrmat(std::size_t width, std::size_t height, std::size_t maps, std::size_t kernel_len,
                std::uint64_t seed, std::size_t max_dense, const std::string& out_dir) {
    const corrmodel::LayerGeometry geom{width, height, maps};
    const corrmodel::CorrelationParams params;
    const Tensor<double> kernels = toy_kernels(maps, kernel_len, seed);

    corrmodel::BuildOptions opts;
    opts.max_dense_dim = max_dense;
    const auto cm = corrmodel::build_correlation_matrix(geom, kernels, params, opts);
    const std::size_t d = cm.dim();
    const std::size_t wh = geom.spatial();

    double diag_err = 0, min_entry = 1, max_offdiag = 0;
    for (std::size_t i = 0; i < d; ++i) {
        diag_err = std::max(diag_err, std::abs(cm.sigma.at(i, i) - 1.0));
        for (std::size_t j = 0; j < d; ++j) {
            min_entry = std::min(min_entry, cm.sigma.at(i, j));
            if (i != j) max_offdiag = std::max(max_offdiag, cm.sigma.at(i, j));
        }
    }

    // canonical order: entry (f*wh + y*w + x, ...) must equal the pairwise
    // formula applied to the decoded coordinates
    double order_err = 0;
    for (std::size_t n1 = 0; n1 < d; ++n1)
        for (std::size_t n2 = 0; n2 < d; ++n2) {
            if (n1 == n2) continue;
            const std::size_t f = n1 / wh, g = n2 / wh;
            const corrmodel::Coord p{(n1 % wh) % width, (n1 % wh) / width};
            const corrmodel::Coord q{(n2 % wh) % width, (n2 % wh) / width};
            const double dist = corrmodel::spatial_distance(p, q, params.distance_scale);
            const double tun =
                f == g ? 1.0
                       : corrmodel::tuning_similarity(std::span<const double>(kernels.slice0(f)),
                                                      std::span<const double>(kernels.slice0(g)));
            const double want = corrmodel::pairwise_correlation(dist, tun, params);
            order_err = std::max(order_err, std::abs(cm.sigma.at(n1, n2) - want));
        }

    // factor quality: max |(L L^T - sigma)_ij|
    double factor_err = 0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double acc = 0;
            for (std::size_t t = 0; t <= std::min(i, j); ++t)
                acc += cm.factor(i, t) * cm.factor(j, t);
            factor_err = std::max(factor_err, std::abs(acc - cm.sigma.at(i, j)));
        }

    const std::string param_str = "corrmat w=" + std::to_string(width) + " h=" +
                                  std::to_string(height) + " k=" + std::to_string(maps) + " m=" +
                                  std::to_string(kernel_len) + " seed=" + std::to_string(seed);
    const std::vector<CheckRow> rows = {
        {"diag_unit_error", diag_err, 0.0, true},
        {"min_entry", min_entry, 0.0, false},
        {"max_offdiag", max_offdiag, 1.0, true},
        {"canonical_order_error", order_err, cm.repaired ? 0.2 : 1e-12, true},
        {"factor_residual", factor_err, 1e-8, true},
        {"repaired", cm.repaired ? 1.0 : 0.0, 0.0, true},
    };
    std::filesystem::create_directories(out_dir);
    return write_check_report(out_dir + "/corrmat_report.csv", digest::sha256_hex(param_str),
                              seed, rows);
}

int cmd_sample_check(std::uint64_t seed, std::size_t draws, std::size_t poisson_draws,
                     const std::string& out_dir) {
    const corrmodel::LayerGeometry geom{4, 4, 3};
    const corrmodel::CorrelationParams params;
    const Tensor<double> kernels = toy_kernels(geom.feature_maps, 9, seed);
    const auto cm = corrmodel::build_correlation_matrix(geom, kernels, params);
    const std::size_t d = cm.dim();
    const double n = static_cast<double>(draws);

    std::vector<CheckRow> rows;

    {
        RandomStream stream(derive_seed(seed, 7101));
        double sum = 0, sq = 0;
        for (std::size_t i = 0; i < draws; ++i) {
            const double u = stream.uniform01();
            sum += u;
            sq += u * u;
        }
        const double mean = sum / n;
        const double var = sq / n - mean * mean;
        rows.push_back({"uniform_mean_error", std::abs(mean - 0.5), 0.01, true});
        rows.push_back({"uniform_var_error", std::abs(var - 1.0 / 12.0), 0.01, true});
    }
    {
        RandomStream stream(derive_seed(seed, 7102));
        double sum = 0, sq = 0;
        for (std::size_t i = 0; i < draws; ++i) {
            const double x = stream.normal();
            sum += x;
            sq += x * x;
        }
        const double mean = sum / n;
        const double var = sq / n - mean * mean;
        rows.push_back({"normal_mean_error", std::abs(mean), 0.02, true});
        rows.push_back({"normal_var_error", std::abs(var - 1.0), 0.03, true});
    }

    // correlated gaussian: empirical correlation vs sigma, entrywise
    {
        RandomStream stream(derive_seed(seed, 7103));
        sampler::GaussianSampleSpec<double> spec;
        spec.factor = &cm.factor;
        const Tensor<double> z = sampler::sample_correlated_gaussian_batch(spec, stream, draws);
        std::vector<double> mean(d, 0), var(d, 0);
        Tensor<double> cross({d, d}, 0.0);
        for (std::size_t r = 0; r < draws; ++r) {
            const double* zp = z.data().data() + r * d;
            for (std::size_t i = 0; i < d; ++i) {
                mean[i] += zp[i];
                for (std::size_t j = 0; j <= i; ++j) cross(i, j) += zp[i] * zp[j];
            }
        }
        for (std::size_t i = 0; i < d; ++i) mean[i] /= n;
        double max_err = 0;
        for (std::size_t i = 0; i < d; ++i) {
            var[i] = cross(i, i) / n - mean[i] * mean[i];
            for (std::size_t j = 0; j < i; ++j) {
                const double cov = cross(i, j) / n - mean[i] * mean[j];
                const double corr = cov / std::sqrt(var[i] * var[j]);
                max_err = std::max(max_err, std::abs(corr - cm.sigma.at(i, j)));
            }
        }
        rows.push_back({"gaussian_max_corr_error", max_err, 0.03, true});
    }

    // correlated poisson (NORTA): means, fano, and the undershoot inequality.
    // A max over ~1e3 pair correlations needs a tighter estimator than the
    // other suites, hence the separate draw count.
    {
        RandomStream stream(derive_seed(seed, 7104));
        const double lambda = 10.0;
        const double pn = static_cast<double>(poisson_draws);
        const std::vector<double> rates(d, lambda);
        sampler::PoissonQuantileCache cache;
        std::vector<double> mean(d, 0);
        Tensor<double> cross({d, d}, 0.0);
        std::vector<std::vector<std::int64_t>> batch(poisson_draws);
        for (std::size_t r = 0; r < poisson_draws; ++r) {
            batch[r] = sampler::sample_correlated_poisson(rates, &cm.factor, stream, cache);
            for (std::size_t i = 0; i < d; ++i) mean[i] += static_cast<double>(batch[r][i]);
        }
        for (std::size_t i = 0; i < d; ++i) mean[i] /= pn;
        for (std::size_t r = 0; r < poisson_draws; ++r)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j <= i; ++j)
                    cross(i, j) += (static_cast<double>(batch[r][i]) - mean[i]) *
                                   (static_cast<double>(batch[r][j]) - mean[j]);

        double mean_err = 0, fano_lo = 1e9, fano_hi = 0, corr_min = 1e9, overshoot = -1e9;
        std::vector<double> var(d, 0);
        for (std::size_t i = 0; i < d; ++i) {
            var[i] = cross(i, i) / pn;
            mean_err = std::max(mean_err, std::abs(mean[i] - lambda) / lambda);
            const double fano = var[i] / mean[i];
            fano_lo = std::min(fano_lo, fano);
            fano_hi = std::max(fano_hi, fano);
        }
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < i; ++j) {
                const double corr = cross(i, j) / pn / std::sqrt(var[i] * var[j]);
                corr_min = std::min(corr_min, corr);
                overshoot = std::max(overshoot, corr - cm.sigma.at(i, j));
            }
        rows.push_back({"poisson_mean_rel_error", mean_err, 0.02, true});
        rows.push_back({"poisson_fano_min", fano_lo, 0.95, false});
        rows.push_back({"poisson_fano_max", fano_hi, 1.05, true});
        rows.push_back({"poisson_corr_min", corr_min, 0.0, false});
        rows.push_back({"poisson_corr_overshoot", overshoot, 0.01, true});
    }

    const std::string param_str = "sample-check seed=" + std::to_string(seed) +
                                  " draws=" + std::to_string(draws) +
                                  " poisson_draws=" + std::to_string(poisson_draws);
    std::filesystem::create_directories(out_dir);
    return write_check_report(out_dir + "/sample_check_report.csv",
                              digest::sha256_hex(param_str), seed, rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"correlated-noise CNN toolkit"};
    app.require_subcommand(1);

    CommonOpts train_opts, exp_opts;
    std::size_t train_run_index = 0;
    auto* train_cmd = app.add_subcommand("train", "train one model, keep the best checkpoint");
    train_opts.attach(train_cmd, true);
    train_cmd->add_option("--run", train_run_index, "run index for seed derivation");

    auto* exp_cmd =
        app.add_subcommand("experiment", "train all configured models over N runs, tabulate");
    exp_opts.attach(exp_cmd, true);

    std::string eval_ckpt, eval_data, eval_out;
    std::size_t eval_subset = 0;
    bool eval_per_class = false;
    std::vector<std::string> eval_occlusions;
    auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on clean + occluded sets");
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "dataset directory (default: from checkpoint)");
    eval_cmd->add_option("--test-subset", eval_subset, "evaluate only the first N records");
    eval_cmd->add_option("--out", eval_out, "output directory");
    eval_cmd->add_flag("--per-class", eval_per_class, "also write per_class.csv");
    eval_cmd->add_option("--occlusion", eval_occlusions,
                         "occlusion kind (repeatable; default: from config)");

    std::string occ_data, occ_kind, occ_out = "out";
    std::size_t occ_block = 4, occ_extent = 16;
    unsigned occ_fill = 0;
    auto* occ_cmd = app.add_subcommand("occlude", "write an occluded copy of the test batch");
    occ_cmd->add_option("--data", occ_data, "dataset directory")->required();
    occ_cmd->add_option("--kind", occ_kind, "occlusion kind")->required();
    occ_cmd->add_option("--block", occ_block, "block size for checker/bars");
    occ_cmd->add_option("--extent", occ_extent, "central square extent");
    occ_cmd->add_option("--fill", occ_fill, "fill byte value");
    occ_cmd->add_option("--out", occ_out, "output directory");

    double hm_d0 = 0.0, hm_d1 = 60.0, hm_k0 = -1.0, hm_k1 = 1.0;
    std::size_t hm_steps = 61;
    std::string hm_out = "out";
    auto* hm_cmd = app.add_subcommand("heatmap", "correlation vs distance/tuning grid");
    hm_cmd->add_option("--d0", hm_d0, "distance range start");
    hm_cmd->add_option("--d1", hm_d1, "distance range end");
    hm_cmd->add_option("--k0", hm_k0, "tuning range start");
    hm_cmd->add_option("--k1", hm_k1, "tuning range end");
    hm_cmd->add_option("--steps", hm_steps, "grid points per axis");
    hm_cmd->add_option("--out", hm_out, "output directory");

    std::size_t cm_w = 4, cm_h = 4, cm_k = 3, cm_m = 9, cm_max = 8192;
    std::uint64_t cm_seed = 1;
    std::string cm_out = "out";
    auto* cm_cmd = app.add_subcommand("corrmat", "build a toy-layer correlation matrix, verify");
    cm_cmd->add_option("--width", cm_w, "layer width");
    cm_cmd->add_option("--height", cm_h, "layer height");
    cm_cmd->add_option("--maps", cm_k, "feature maps");
    cm_cmd->add_option("--kernel-len", cm_m, "flattened kernel length");
    cm_cmd->add_option("--seed", cm_seed, "kernel seed");
    cm_cmd->add_option("--max-dense", cm_max, "dense dimension limit");
    cm_cmd->add_option("--out", cm_out, "output directory");

    std::uint64_t sc_seed = 1;
    std::size_t sc_draws = 50000, sc_poisson_draws = 200000;
    std::string sc_out = "out";
    auto* sc_cmd = app.add_subcommand("sample-check", "Monte Carlo sampler verification suite");
    sc_cmd->add_option("--seed", sc_seed, "stream seed");
    sc_cmd->add_option("--draws", sc_draws, "draws per suite");
    sc_cmd->add_option("--poisson-draws", sc_poisson_draws, "draws for the poisson suite");
    sc_cmd->add_option("--out", sc_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_opts, train_run_index);
        if (exp_cmd->parsed()) return cmd_experiment(exp_opts);
        if (eval_cmd->parsed())
            return cmd_eval(eval_ckpt, eval_data, eval_subset, eval_out, eval_per_class,
                            eval_occlusions);
        if (occ_cmd->parsed())
            return cmd_occlude(occ_data, occ_kind, occ_block, occ_extent, occ_fill, occ_out);
        if (hm_cmd->parsed()) return cmd_heatmap(hm_d0, hm_d1, hm_k0, hm_k1, hm_steps, hm_out);
        if (cm_cmd->parsed())
            return cmd_corrmat(cm_w, cm_h, cm_k, cm_m, cm_seed, cm_max, cm_out);
        if (sc_cmd->parsed())
            return cmd_sample_check(sc_seed, sc_draws, sc_poisson_draws, sc_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
