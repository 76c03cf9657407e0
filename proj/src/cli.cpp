#include "copnet/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "copnet/closing.hpp"
#include "copnet/copf_io.hpp"
#include "copnet/labelling.hpp"
#include "copnet/metrics.hpp"
#include "copnet/parallel.hpp"
#include "copnet/pde.hpp"
#include "copnet/perturb.hpp"
#include "copnet/pgm_io.hpp"
#include "copnet/preprocess.hpp"
#include "copnet/synth.hpp"

namespace copnet::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kDefaultSpacing = 90.0 / 512.0;  // um/px at the 512 standardization

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string zero_pad(int v, int digits) {
    std::string s = std::to_string(v);
    while (int(s.size()) < digits) s.insert(s.begin(), '0');
    return s;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return Rng::stream(seed, index).next_u64();
}

// ---------------------------------------------------------------------
// Run manifest: one JSON ledger per command invocation, recording the
// fully resolved configuration so a run can be reproduced bit-exactly.

struct ManifestWriter {
    std::string command;
    std::vector<std::string> argv;
    json config = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void set_config(const CLI::App& app) {
        for (const CLI::Option* opt : app.get_options()) {
            const std::string name = opt->get_lnames().empty() ? opt->get_name()
                                                               : opt->get_lnames().front();
            if (name.empty() || name == "help") continue;
            if (opt->results().empty()) {
                config[name] = opt->get_default_str();
            } else if (opt->results().size() == 1) {
                config[name] = opt->results().front();
            } else {
                config[name] = opt->results();
            }
        }
    }

    void write(const fs::path& path) const {
        json doc;
        doc["command"] = command;
        doc["tool_version"] = kVersion;
        doc["seed"] = seed;
        doc["argv"] = argv;
        doc["config"] = config;
        doc["inputs"] = inputs;
        doc["outputs"] = outputs;
        doc["duration_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write manifest " + path.string());
        out << doc.dump(2) << "\n";
    }
};

// ---------------------------------------------------------------------
// Input loading

Field2D load_probability_map(const fs::path& path, double spacing_um) {
    if (path.extension() == ".copf") return read_copf(path);
    return to_field(read_pgm_mask(path), spacing_um);
}

BinaryMask load_contour_mask(const fs::path& path, double spacing_um, double theta) {
    if (path.extension() == ".copf") return binarize(read_copf(path), theta);
    (void)spacing_um;
    return read_pgm_mask(path);
}

ClosingBackend parse_backend(const std::string& spec, double timeout_s) {
    if (spec == "identity") return IdentityBackend{};
    if (spec.rfind("morph", 0) == 0) {
        const auto colon = spec.find(':');
        int radius = 2;
        if (colon != std::string::npos) radius = std::stoi(spec.substr(colon + 1));
        return MorphologicalBackend{radius};
    }
    if (spec.rfind("external:", 0) == 0)
        return ExternalBackend{spec.substr(9), timeout_s};
    throw CLI::ValidationError(
        "--backend", "expected identity, morph:<radius_px>, or external:<command>");
}

// Per-task error capture so one bad slice does not abort the batch.
struct TaskErrors {
    std::vector<std::string> messages;

    explicit TaskErrors(std::size_t n) : messages(n) {}

    template <typename Fn>
    void guard(int i, const std::string& context, Fn&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            messages[std::size_t(i)] = context + ": " + e.what();
        }
    }

    int report() const {
        int failures = 0;
        for (const std::string& m : messages) {
            if (m.empty()) continue;
            std::cerr << "error: " << m << "\n";
            ++failures;
        }
        return failures;
    }
};

// ---------------------------------------------------------------------
// Per-slice evaluation shared by `evaluate` and `grid`.

struct SliceScores {
    double labelled_pct = 0.0;
    double merged_pct = 0.0;
    double split_pct = 0.0;
    double nsd_score = 0.0;
    double cldice_score = 0.0;
};

struct EvalOptions {
    double overlap_threshold = 0.85;
    OverlapMeasure measure = OverlapMeasure::iou;
    double nsd_tol_px = 2.0;
    LabelConfig label_config;
};

SliceScores score_slice(const BinaryMask& pred_contours, const LabelMap& pred_labels,
                        const BinaryMask& gt_contours, const LabelMap& gt_labels,
                        const EvalOptions& opt) {
    SliceScores s;
    const MatchReport report =
        match_cells(pred_labels, gt_labels, opt.overlap_threshold, opt.measure);
    s.labelled_pct = report.labelled_pct;
    s.merged_pct = report.merged_pct;
    s.split_pct = report.split_pct;
    s.nsd_score = nsd(pred_contours, gt_contours, opt.nsd_tol_px);
    s.cldice_score = cldice(pred_contours, gt_contours);
    return s;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / values.size())};
}

// ---------------------------------------------------------------------
// Subcommand option bundles

struct SynthOpts {
    std::string out_dir;
    std::string stem = "tissue";
    int count = 1;
    int cells = 100;
    double min_separation = 4.0;
    int thickness = 3;
    int width = 512;
    int height = 512;
    double spacing = kDefaultSpacing;
    std::uint64_t seed = 1;
    int jobs = 1;
};

struct DegradeOpts {
    int n1 = 6;
    int n2 = 10;
    double d_min = 0.1;
    double d_max = 1.0;
    double r_min = 2.0;
    double r_max = 7.0;
    double total_time = 1.0;
    double dt = 0.05;
    bool no_clamp_tents = false;
    bool continuous_radii = false;

    DegradeConfig to_config(std::uint64_t seed) const {
        DegradeConfig c;
        c.n1 = n1;
        c.n2 = n2;
        c.d_min = d_min;
        c.d_max = d_max;
        c.r_min = r_min;
        c.r_max = r_max;
        c.total_time = total_time;
        c.dt = dt;
        c.seed = seed;
        c.clamp_tents = !no_clamp_tents;
        c.integer_radii = !continuous_radii;
        c.validate();
        return c;
    }
};

void add_degrade_options(CLI::App* cmd, DegradeOpts& o) {
    cmd->add_option("--n1", o.n1, "Local diffusion site count");
    cmd->add_option("--n2", o.n2, "Local drop site count");
    cmd->add_option("--d-min", o.d_min, "Baseline diffusion (um^2/s)");
    cmd->add_option("--d-max", o.d_max, "Peak diffusion (um^2/s)");
    cmd->add_option("--r-min", o.r_min, "Minimum site radius (um)");
    cmd->add_option("--r-max", o.r_max, "Maximum site radius (um)");
    cmd->add_option("--total-time", o.total_time, "Integration horizon (s)");
    cmd->add_option("--dt", o.dt, "Time step (s)");
    cmd->add_flag("--no-clamp-tents", o.no_clamp_tents,
                  "Allow overlapping tents to exceed the nominal ranges");
    cmd->add_flag("--continuous-radii", o.continuous_radii,
                  "Draw radii continuously instead of on integer um");
}

struct ClosingOpts {
    std::string backend = "morph:2";
    double eps_conv = 0.001;
    int max_iters = 30;
    double theta = 0.5;
    double timeout_s = 300.0;

    ClosingConfig to_config() const {
        ClosingConfig c;
        c.eps_conv = eps_conv;
        c.max_iters = max_iters;
        c.theta = theta;
        c.backend = parse_backend(backend, timeout_s);
        c.validate();
        return c;
    }
};

void add_closing_options(CLI::App* cmd, ClosingOpts& o) {
    cmd->add_option("--backend", o.backend,
                    "Closing backend: identity, morph:<radius_px>, external:<command>");
    cmd->add_option("--eps-conv", o.eps_conv, "Convergence threshold on modified-pixel fraction");
    cmd->add_option("--max-iters", o.max_iters, "Iteration cap");
    cmd->add_option("--theta", o.theta, "Binarization threshold");
    cmd->add_option("--timeout", o.timeout_s, "External backend timeout (s)");
}

CLI::Option* add_jobs_option(CLI::App* cmd, int& jobs) {
    return cmd->add_option("--jobs", jobs, "Slice-level parallelism")->envname("COPNET_JOBS");
}

// ---------------------------------------------------------------------
// synth

int cmd_synth(const SynthOpts& o, ManifestWriter& manifest) {
    fs::create_directories(o.out_dir);
    const auto n_tasks = std::size_t(o.count);
    TaskErrors errors(n_tasks);
    std::vector<std::vector<std::string>> outputs(n_tasks);

    parallel_for(o.count, o.jobs, [&](int i) {
        errors.guard(i, o.stem + " slice " + std::to_string(i), [&] {
            SynthConfig cfg;
            cfg.n_cells = o.cells;
            cfg.min_separation_um = o.min_separation;
            cfg.thickness_px = o.thickness;
            cfg.width = o.width;
            cfg.height = o.height;
            cfg.spacing_um = o.spacing;
            cfg.seed = o.count == 1 ? o.seed : derive_seed(o.seed, std::uint64_t(i));
            const SynthTissue tissue = voronoi_tissue(cfg);

            const std::string stem =
                o.count == 1 ? o.stem : o.stem + "_" + zero_pad(i, 3);
            const fs::path contours = fs::path(o.out_dir) / (stem + "_contours.pgm");
            const fs::path labels = fs::path(o.out_dir) / (stem + "_labels.pgm");
            write_pgm(tissue.contours, contours);
            write_pgm(tissue.cells, labels);
            outputs[std::size_t(i)] = {contours.string(), labels.string()};
        });
    });

    const int failures = errors.report();
    for (const auto& files : outputs)
        manifest.outputs.insert(manifest.outputs.end(), files.begin(), files.end());
    std::cout << "synth: wrote " << (o.count - failures) << "/" << o.count << " slice(s), "
              << o.cells << " cells each\n";
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------
// simulate

struct SimulateOpts {
    std::vector<std::string> gt_paths;
    std::string out_dir;
    int reps = 1;
    double spacing = kDefaultSpacing;
    std::uint64_t seed = 1;
    int jobs = 1;
    DegradeOpts degrade;
};

int cmd_simulate(const SimulateOpts& o, ManifestWriter& manifest) {
    fs::create_directories(o.out_dir);
    const DegradeConfig config = o.degrade.to_config(o.seed);

    const int n_slices = int(o.gt_paths.size());
    const int n_tasks = n_slices * o.reps;
    const auto task_count = std::size_t(n_tasks);
    TaskErrors errors(task_count);
    std::vector<std::vector<std::string>> outputs(task_count);

    parallel_for(n_tasks, o.jobs, [&](int t) {
        const int slice = t / o.reps;
        const int rep = t % o.reps;
        const fs::path gt_path = o.gt_paths[std::size_t(slice)];
        errors.guard(t, gt_path.string() + " rep " + std::to_string(rep), [&] {
            const BinaryMask gt = read_pgm_mask(gt_path);
            const auto [degraded, target] = simulate_training_pair(
                gt, config, o.spacing, std::uint64_t(slice), std::uint64_t(rep));

            const std::string stem = gt_path.stem().string();
            const fs::path degraded_path =
                fs::path(o.out_dir) / (stem + "_k" + std::to_string(rep) + "_degraded.copf");
            write_copf(degraded, degraded_path);
            outputs[std::size_t(t)].push_back(degraded_path.string());
            if (rep == 0) {
                const fs::path gt_out = fs::path(o.out_dir) / (stem + "_gt.pgm");
                write_pgm(target, gt_out);
                outputs[std::size_t(t)].push_back(gt_out.string());
            }
        });
    });

    const int failures = errors.report();
    for (const auto& files : outputs)
        manifest.outputs.insert(manifest.outputs.end(), files.begin(), files.end());
    std::cout << "simulate: wrote " << (n_tasks - failures) << "/" << n_tasks
              << " degraded map(s)\n";
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------
// close

struct CloseOpts {
    std::vector<std::string> in_paths;
    std::string out_dir;
    double spacing = kDefaultSpacing;
    bool emit_iterations = false;
    int jobs = 1;
    ClosingOpts closing;
};

int cmd_close(const CloseOpts& o, ManifestWriter& manifest) {
    fs::create_directories(o.out_dir);
    const ClosingConfig config = o.closing.to_config();

    const int n = int(o.in_paths.size());
    const auto n_inputs = std::size_t(n);
    TaskErrors errors(n_inputs);
    std::vector<std::vector<std::string>> outputs(n_inputs);

    parallel_for(n, o.jobs, [&](int i) {
        const fs::path in_path = o.in_paths[std::size_t(i)];
        errors.guard(i, in_path.string(), [&] {
            const Field2D input = load_probability_map(in_path, o.spacing);
            const std::string stem = in_path.stem().string();

            std::function<void(int, const Field2D&)> observer;
            if (o.emit_iterations) {
                observer = [&, stem](int iter, const Field2D& map) {
                    const fs::path p =
                        fs::path(o.out_dir) / (stem + "_iter" + zero_pad(iter, 3) + ".copf");
                    write_copf(map, p);
                    outputs[std::size_t(i)].push_back(p.string());
                };
            }

            const ClosingRun run = iterate_closing(input, config, observer);

            const fs::path closed = fs::path(o.out_dir) / (stem + "_closed.copf");
            write_copf(run.final_map, closed);
            outputs[std::size_t(i)].push_back(closed.string());

            const fs::path history = fs::path(o.out_dir) / (stem + "_history.csv");
            std::ofstream csv(history);
            csv << "iteration,modified_fraction\n";
            for (std::size_t k = 0; k < run.history.size(); ++k)
                csv << k << "," << format_double(run.history[k]) << "\n";
            outputs[std::size_t(i)].push_back(history.string());

            std::cout << in_path.string() << ": " << run.iterations << " iteration(s), "
                      << (run.converged ? "converged" : "iteration cap reached") << "\n";
        });
    });

    const int failures = errors.report();
    for (const auto& files : outputs)
        manifest.outputs.insert(manifest.outputs.end(), files.begin(), files.end());
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------
// label

struct LabelOpts {
    std::vector<std::string> in_paths;
    std::string out_dir;
    double theta = 0.5;
    int connectivity = 4;
    int min_area = 64;
    std::string exclusion_path;
    double spacing = kDefaultSpacing;
    int jobs = 1;
};

int cmd_label(const LabelOpts& o, ManifestWriter& manifest) {
    fs::create_directories(o.out_dir);
    LabelConfig config;
    config.theta = o.theta;
    config.connectivity = o.connectivity;
    config.min_area_px = o.min_area;
    if (!o.exclusion_path.empty()) config.exclusion = read_pgm_mask(o.exclusion_path);
    config.validate();

    const int n = int(o.in_paths.size());
    const auto n_inputs = std::size_t(n);
    TaskErrors errors(n_inputs);
    std::vector<std::string> outputs(n_inputs);

    parallel_for(n, o.jobs, [&](int i) {
        const fs::path in_path = o.in_paths[std::size_t(i)];
        errors.guard(i, in_path.string(), [&] {
            const Field2D contour = load_probability_map(in_path, o.spacing);
            const LabelMap labels = label_cells(contour, config);
            const fs::path out =
                fs::path(o.out_dir) / (in_path.stem().string() + "_labels.pgm");
            write_pgm(labels, out);
            outputs[std::size_t(i)] = out.string();
            std::cout << in_path.string() << ": " << labels.max_label() << " cell(s)\n";
        });
    });

    const int failures = errors.report();
    for (const std::string& f : outputs)
        if (!f.empty()) manifest.outputs.push_back(f);
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
    std::vector<std::string> pred_contours;
    std::vector<std::string> gt_contours;
    std::vector<std::string> pred_labels;
    std::vector<std::string> gt_labels;
    std::string out_csv;
    double overlap_threshold = 0.85;
    std::string overlap_measure = "iou";
    double nsd_tol = 2.0;
    double theta = 0.5;
    int connectivity = 4;
    int min_area = 64;
    double spacing = kDefaultSpacing;
    bool interslice = false;
    int jobs = 1;
};

int cmd_evaluate(const EvaluateOpts& o, ManifestWriter& manifest) {
    const std::size_t n = o.pred_contours.size();
    if (o.gt_contours.size() != n)
        throw CLI::ValidationError("--gt-contours", "mismatched slice counts");
    if (!o.pred_labels.empty() && o.pred_labels.size() != n)
        throw CLI::ValidationError("--pred-labels", "mismatched slice counts");
    if (!o.gt_labels.empty() && o.gt_labels.size() != n)
        throw CLI::ValidationError("--gt-labels", "mismatched slice counts");

    EvalOptions eval;
    eval.overlap_threshold = o.overlap_threshold;
    eval.measure = o.overlap_measure == "over-gt" ? OverlapMeasure::intersection_over_gt
                                                  : OverlapMeasure::iou;
    eval.nsd_tol_px = o.nsd_tol;
    eval.label_config.theta = o.theta;
    eval.label_config.connectivity = o.connectivity;
    eval.label_config.min_area_px = o.min_area;
    eval.label_config.validate();

    TaskErrors errors(n);
    std::vector<SliceScores> scores(n);
    std::vector<BinaryMask> pred_masks(n);

    parallel_for(int(n), o.jobs, [&](int i) {
        errors.guard(i, o.pred_contours[std::size_t(i)], [&] {
            const auto idx = std::size_t(i);
            const BinaryMask pred =
                load_contour_mask(o.pred_contours[idx], o.spacing, o.theta);
            const BinaryMask gt = load_contour_mask(o.gt_contours[idx], o.spacing, o.theta);
            const LabelMap pred_lab =
                o.pred_labels.empty()
                    ? label_cells(to_field(pred, o.spacing), eval.label_config)
                    : read_pgm_labels(o.pred_labels[idx]);
            const LabelMap gt_lab =
                o.gt_labels.empty()
                    ? label_cells(to_field(gt, o.spacing), eval.label_config)
                    : read_pgm_labels(o.gt_labels[idx]);
            scores[idx] = score_slice(pred, pred_lab, gt, gt_lab, eval);
            pred_masks[idx] = pred;
        });
    });

    const int failures = errors.report();
    if (failures > 0) return 1;

    std::ofstream csv(o.out_csv);
    if (!csv) throw std::runtime_error("cannot write " + o.out_csv);
    csv << "slice,labelled_pct,merged_pct,split_pct,nsd,cldice\n";
    std::vector<double> cols[5];
    for (std::size_t i = 0; i < n; ++i) {
        const SliceScores& s = scores[i];
        csv << i << "," << format_double(s.labelled_pct) << "," << format_double(s.merged_pct)
            << "," << format_double(s.split_pct) << "," << format_double(s.nsd_score) << ","
            << format_double(s.cldice_score) << "\n";
        cols[0].push_back(s.labelled_pct);
        cols[1].push_back(s.merged_pct);
        cols[2].push_back(s.split_pct);
        cols[3].push_back(s.nsd_score);
        cols[4].push_back(s.cldice_score);
    }
    csv << "mean";
    for (auto& col : cols) csv << "," << format_double(mean_std(col).first);
    csv << "\nstd";
    for (auto& col : cols) csv << "," << format_double(mean_std(col).second);
    csv << "\n";

    if (o.interslice) {
        if (n < 2) throw std::runtime_error("--interslice requires at least 2 slices");
        const auto [mean, sd] = interslice_cldice(pred_masks);
        csv << "interslice_mean,,,,," << format_double(mean) << "\n";
        csv << "interslice_std,,,,," << format_double(sd) << "\n";
    }
    manifest.outputs.push_back(o.out_csv);
    std::cout << "evaluate: " << n << " slice(s) -> " << o.out_csv << "\n";
    return 0;
}

// ---------------------------------------------------------------------
// grid

struct GridOpts {
    std::vector<std::string> gt_contours;
    std::vector<std::string> gt_labels;
    std::vector<int> n1_set = {0, 6, 12};
    std::vector<int> n2_set = {0, 10, 20};
    int reps = 1;
    std::string out_csv;
    double spacing = kDefaultSpacing;
    std::uint64_t seed = 1;
    int jobs = 1;
    double overlap_threshold = 0.85;
    double nsd_tol = 2.0;
    double theta = 0.5;
    int connectivity = 4;
    int min_area = 64;
    DegradeOpts degrade;
    ClosingOpts closing;
};

int cmd_grid(const GridOpts& o, ManifestWriter& manifest) {
    const std::size_t n_slices = o.gt_contours.size();
    if (!o.gt_labels.empty() && o.gt_labels.size() != n_slices)
        throw CLI::ValidationError("--gt-labels", "mismatched slice counts");

    EvalOptions eval;
    eval.overlap_threshold = o.overlap_threshold;
    eval.nsd_tol_px = o.nsd_tol;
    eval.label_config.theta = o.theta;
    eval.label_config.connectivity = o.connectivity;
    eval.label_config.min_area_px = o.min_area;
    eval.label_config.validate();
    const ClosingConfig closing_config = o.closing.to_config();

    // Ground truth is loaded once and shared across grid cells.
    std::vector<BinaryMask> gt_masks(n_slices);
    std::vector<LabelMap> gt_labs(n_slices);
    for (std::size_t i = 0; i < n_slices; ++i) {
        gt_masks[i] = load_contour_mask(o.gt_contours[i], o.spacing, o.theta);
        gt_labs[i] = o.gt_labels.empty()
                         ? label_cells(to_field(gt_masks[i], o.spacing), eval.label_config)
                         : read_pgm_labels(o.gt_labels[i]);
    }

    const int n_cells = int(o.n1_set.size() * o.n2_set.size());
    const int tasks_per_cell = int(n_slices) * o.reps;
    const int n_tasks = n_cells * tasks_per_cell;
    const auto task_count = std::size_t(n_tasks);
    TaskErrors errors(task_count);
    std::vector<SliceScores> scores(task_count);

    parallel_for(n_tasks, o.jobs, [&](int t) {
        const int cell = t / tasks_per_cell;
        const int within = t % tasks_per_cell;
        const int slice = within / o.reps;
        const int rep = within % o.reps;
        const int n1 = o.n1_set[std::size_t(cell) / o.n2_set.size()];
        const int n2 = o.n2_set[std::size_t(cell) % o.n2_set.size()];
        errors.guard(t, "grid (" + std::to_string(n1) + "," + std::to_string(n2) + ") slice " +
                            std::to_string(slice),
                     [&] {
                         DegradeConfig config = o.degrade.to_config(o.seed);
                         config.n1 = n1;
                         config.n2 = n2;
                         const auto [degraded, target] = simulate_training_pair(
                             gt_masks[std::size_t(slice)], config, o.spacing,
                             std::uint64_t(slice), std::uint64_t(rep));
                         const ClosingRun run = iterate_closing(degraded, closing_config);
                         const BinaryMask pred = binarize(run.final_map, o.theta);
                         const LabelMap pred_lab = label_cells(run.final_map, eval.label_config);
                         scores[std::size_t(t)] = score_slice(
                             pred, pred_lab, gt_masks[std::size_t(slice)],
                             gt_labs[std::size_t(slice)], eval);
                     });
    });

    const int failures = errors.report();
    if (failures > 0) return 1;

    std::ofstream csv(o.out_csv);
    if (!csv) throw std::runtime_error("cannot write " + o.out_csv);
    csv << "n1,n2,labelled_pct_mean,labelled_pct_std,merged_pct_mean,merged_pct_std,"
           "split_pct_mean,split_pct_std,nsd_mean,nsd_std,cldice_mean,cldice_std\n";
    for (int cell = 0; cell < n_cells; ++cell) {
        const int n1 = o.n1_set[std::size_t(cell) / o.n2_set.size()];
        const int n2 = o.n2_set[std::size_t(cell) % o.n2_set.size()];
        std::vector<double> cols[5];
        for (int k = 0; k < tasks_per_cell; ++k) {
            const SliceScores& s = scores[std::size_t(cell) * tasks_per_cell + k];
            cols[0].push_back(s.labelled_pct);
            cols[1].push_back(s.merged_pct);
            cols[2].push_back(s.split_pct);
            cols[3].push_back(s.nsd_score);
            cols[4].push_back(s.cldice_score);
        }
        csv << n1 << "," << n2;
        for (auto& col : cols) {
            const auto [mean, sd] = mean_std(col);
            csv << "," << format_double(mean) << "," << format_double(sd);
        }
        csv << "\n";
    }
    manifest.outputs.push_back(o.out_csv);
    std::cout << "grid: " << n_cells << " cell(s) x " << tasks_per_cell << " run(s) -> "
              << o.out_csv << "\n";
    return 0;
}

// ---------------------------------------------------------------------
// stats

struct StatsOpts {
    std::string csv_a;
    std::string csv_b;
    std::string metric = "all";
    std::string alternative = "greater";
    std::string method = "auto";
    double alpha = 0.05;
    std::string out_csv;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;  // per-slice rows only
};

CsvTable read_eval_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty CSV");
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) table.header.push_back(cell);
    table.columns.resize(table.header.size());

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        // Keep per-slice rows; summary rows have a non-numeric first cell.
        if (cells.empty() ||
            cells[0].find_first_not_of("0123456789") != std::string::npos)
            continue;
        for (std::size_t c = 1; c < cells.size() && c < table.columns.size(); ++c)
            table.columns[c].push_back(std::stod(cells[c]));
    }
    return table;
}

int cmd_stats(const StatsOpts& o, ManifestWriter& manifest) {
    const CsvTable a = read_eval_csv(o.csv_a);
    const CsvTable b = read_eval_csv(o.csv_b);
    if (a.header != b.header)
        throw std::runtime_error("stats: CSV headers differ between runs");

    const Alternative alt =
        o.alternative == "less" ? Alternative::less : Alternative::greater;
    PValueMethod method = PValueMethod::automatic;
    if (o.method == "exact") method = PValueMethod::exact;
    else if (o.method == "normal") method = PValueMethod::normal;

    std::ofstream csv(o.out_csv);
    if (!csv) throw std::runtime_error("cannot write " + o.out_csv);
    csv << "metric,u,p,method,significant\n";
    bool matched = false;
    for (std::size_t c = 1; c < a.header.size(); ++c) {
        if (o.metric != "all" && a.header[c] != o.metric) continue;
        matched = true;
        const MannWhitneyResult r = mann_whitney_u(a.columns[c], b.columns[c], alt, method);
        const bool significant = r.p < o.alpha;
        csv << a.header[c] << "," << format_double(r.u) << "," << format_double(r.p) << ","
            << (r.exact ? "exact" : "normal") << "," << (significant ? "yes" : "no") << "\n";
        std::cout << a.header[c] << ": U=" << format_double(r.u) << " p=" << format_double(r.p)
                  << (significant ? " (significant at alpha=" : " (not significant at alpha=")
                  << format_double(o.alpha) << ")\n";
    }
    if (!matched) throw std::runtime_error("stats: metric '" + o.metric + "' not found");
    manifest.outputs.push_back(o.out_csv);
    return 0;
}

}  // namespace

// ---------------------------------------------------------------------

int run(int argc, const char* const* argv) {
    CLI::App app{"Cell-contour closing pipeline: degradation simulation, iterative closing, "
                 "instance labelling, and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    SynthOpts synth_opts;
    SimulateOpts sim_opts;
    CloseOpts close_opts;
    LabelOpts label_opts;
    EvaluateOpts eval_opts;
    GridOpts grid_opts;
    StatsOpts stats_opts;

    CLI::App* synth = app.add_subcommand("synth", "Generate synthetic ground-truth tissue");
    synth->set_config("--config");
    synth->add_option("--out-dir", synth_opts.out_dir, "Output directory")->required();
    synth->add_option("--stem", synth_opts.stem, "Output file stem");
    synth->add_option("--count", synth_opts.count, "Number of slices");
    synth->add_option("--cells", synth_opts.cells, "Cells per slice");
    synth->add_option("--min-separation", synth_opts.min_separation,
                      "Minimum seed separation (um)");
    synth->add_option("--thickness", synth_opts.thickness, "Contour thickness (px)");
    synth->add_option("--width", synth_opts.width, "Raster width (px)");
    synth->add_option("--height", synth_opts.height, "Raster height (px)");
    synth->add_option("--spacing", synth_opts.spacing, "Pixel spacing (um/px)");
    synth->add_option("--seed", synth_opts.seed, "Random seed");
    add_jobs_option(synth, synth_opts.jobs);

    CLI::App* simulate =
        app.add_subcommand("simulate", "Degrade ground-truth contours into probability maps");
    simulate->set_config("--config");
    simulate->add_option("--gt", sim_opts.gt_paths, "Ground-truth contour PGMs")->required();
    simulate->add_option("--out-dir", sim_opts.out_dir, "Output directory")->required();
    simulate->add_option("--reps", sim_opts.reps, "Degraded repetitions per slice");
    simulate->add_option("--spacing", sim_opts.spacing, "Pixel spacing (um/px)");
    simulate->add_option("--seed", sim_opts.seed, "Random seed");
    add_degrade_options(simulate, sim_opts.degrade);
    add_jobs_option(simulate, sim_opts.jobs);

    CLI::App* close = app.add_subcommand("close", "Iteratively close probability maps");
    close->set_config("--config");
    close->add_option("--in", close_opts.in_paths, "Input maps (COPF or PGM)")->required();
    close->add_option("--out-dir", close_opts.out_dir, "Output directory")->required();
    close->add_option("--spacing", close_opts.spacing, "Pixel spacing for PGM inputs (um/px)");
    close->add_flag("--emit-iterations", close_opts.emit_iterations,
                    "Write every intermediate map");
    add_closing_options(close, close_opts.closing);
    add_jobs_option(close, close_opts.jobs);

    CLI::App* label = app.add_subcommand("label", "Label cells by connected components");
    label->set_config("--config");
    label->add_option("--in", label_opts.in_paths, "Input contour maps (COPF or PGM)")
        ->required();
    label->add_option("--out-dir", label_opts.out_dir, "Output directory")->required();
    label->add_option("--theta", label_opts.theta, "Binarization threshold");
    label->add_option("--connectivity", label_opts.connectivity, "Cell connectivity (4 or 8)");
    label->add_option("--min-area", label_opts.min_area, "Minimum component area (px)");
    label->add_option("--exclusion", label_opts.exclusion_path, "Exclusion mask PGM");
    label->add_option("--spacing", label_opts.spacing, "Pixel spacing for PGM inputs (um/px)");
    add_jobs_option(label, label_opts.jobs);

    CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
    evaluate->set_config("--config");
    evaluate->add_option("--pred-contours", eval_opts.pred_contours, "Predicted contour maps")
        ->required();
    evaluate->add_option("--gt-contours", eval_opts.gt_contours, "Ground-truth contour maps")
        ->required();
    evaluate->add_option("--pred-labels", eval_opts.pred_labels,
                         "Predicted label PGMs (derived from contours when omitted)");
    evaluate->add_option("--gt-labels", eval_opts.gt_labels,
                         "Ground-truth label PGMs (derived from contours when omitted)");
    evaluate->add_option("--out", eval_opts.out_csv, "Output CSV")->required();
    evaluate->add_option("--overlap-threshold", eval_opts.overlap_threshold,
                         "Correct-labelling overlap threshold");
    evaluate->add_option("--overlap-measure", eval_opts.overlap_measure,
                         "Overlap measure: iou or over-gt");
    evaluate->add_option("--nsd-tol", eval_opts.nsd_tol, "NSD tolerance (px)");
    evaluate->add_option("--theta", eval_opts.theta, "Binarization threshold");
    evaluate->add_option("--connectivity", eval_opts.connectivity, "Cell connectivity");
    evaluate->add_option("--min-area", eval_opts.min_area, "Minimum component area (px)");
    evaluate->add_option("--spacing", eval_opts.spacing, "Pixel spacing (um/px)");
    evaluate->add_flag("--interslice", eval_opts.interslice,
                       "Append inter-slice clDice of the predictions");
    add_jobs_option(evaluate, eval_opts.jobs);

    CLI::App* grid = app.add_subcommand(
        "grid", "Sweep (N1, N2) degradation settings through the closing pipeline");
    grid->set_config("--config");
    grid->add_option("--gt-contours", grid_opts.gt_contours, "Ground-truth contour maps")
        ->required();
    grid->add_option("--gt-labels", grid_opts.gt_labels,
                     "Ground-truth label PGMs (derived when omitted)");
    grid->add_option("--n1-set", grid_opts.n1_set, "N1 values");
    grid->add_option("--n2-set", grid_opts.n2_set, "N2 values");
    grid->add_option("--reps", grid_opts.reps, "Repetitions per slice");
    grid->add_option("--out", grid_opts.out_csv, "Output CSV")->required();
    grid->add_option("--spacing", grid_opts.spacing, "Pixel spacing (um/px)");
    grid->add_option("--seed", grid_opts.seed, "Random seed");
    grid->add_option("--overlap-threshold", grid_opts.overlap_threshold,
                     "Correct-labelling overlap threshold");
    grid->add_option("--nsd-tol", grid_opts.nsd_tol, "NSD tolerance (px)");
    grid->add_option("--theta", grid_opts.theta, "Binarization threshold");
    grid->add_option("--connectivity", grid_opts.connectivity, "Cell connectivity");
    grid->add_option("--min-area", grid_opts.min_area, "Minimum component area (px)");
    add_degrade_options(grid, grid_opts.degrade);
    add_closing_options(grid, grid_opts.closing);
    add_jobs_option(grid, grid_opts.jobs);

    CLI::App* stats = app.add_subcommand("stats", "Mann-Whitney U test between two run CSVs");
    stats->set_config("--config");
    stats->add_option("--a", stats_opts.csv_a, "First evaluate CSV")->required();
    stats->add_option("--b", stats_opts.csv_b, "Second evaluate CSV")->required();
    stats->add_option("--metric", stats_opts.metric, "Metric column, or 'all'");
    stats->add_option("--alternative", stats_opts.alternative, "greater or less");
    stats->add_option("--method", stats_opts.method, "auto, exact, or normal");
    stats->add_option("--alpha", stats_opts.alpha, "Significance threshold");
    stats->add_option("--out", stats_opts.out_csv, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    ManifestWriter manifest;
    manifest.argv.assign(argv, argv + argc);

    try {
        CLI::App* cmd = app.get_subcommands().front();
        manifest.command = cmd->get_name();
        manifest.set_config(*cmd);

        int rc = 0;
        fs::path manifest_path;
        if (cmd == synth) {
            manifest.seed = synth_opts.seed;
            manifest.inputs = {};
            rc = cmd_synth(synth_opts, manifest);
            manifest_path = fs::path(synth_opts.out_dir) / "synth_manifest.json";
        } else if (cmd == simulate) {
            manifest.seed = sim_opts.seed;
            manifest.inputs = sim_opts.gt_paths;
            rc = cmd_simulate(sim_opts, manifest);
            manifest_path = fs::path(sim_opts.out_dir) / "simulate_manifest.json";
        } else if (cmd == close) {
            manifest.inputs = close_opts.in_paths;
            rc = cmd_close(close_opts, manifest);
            manifest_path = fs::path(close_opts.out_dir) / "close_manifest.json";
        } else if (cmd == label) {
            manifest.inputs = label_opts.in_paths;
            rc = cmd_label(label_opts, manifest);
            manifest_path = fs::path(label_opts.out_dir) / "label_manifest.json";
        } else if (cmd == evaluate) {
            manifest.inputs = eval_opts.pred_contours;
            manifest.inputs.insert(manifest.inputs.end(), eval_opts.gt_contours.begin(),
                                   eval_opts.gt_contours.end());
            rc = cmd_evaluate(eval_opts, manifest);
            manifest_path = fs::path(eval_opts.out_csv + ".manifest.json");
        } else if (cmd == grid) {
            manifest.seed = grid_opts.seed;
            manifest.inputs = grid_opts.gt_contours;
            rc = cmd_grid(grid_opts, manifest);
            manifest_path = fs::path(grid_opts.out_csv + ".manifest.json");
        } else if (cmd == stats) {
            manifest.inputs = {stats_opts.csv_a, stats_opts.csv_b};
            rc = cmd_stats(stats_opts, manifest);
            manifest_path = fs::path(stats_opts.out_csv + ".manifest.json");
        }
        manifest.write(manifest_path);
        return rc;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace copnet::cli
