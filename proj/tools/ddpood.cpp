// Command-line front end: run, invertibility, interpolate, detect, toy, metrics.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "ddpood/errors.hpp"
#include "ddpood/experiment.hpp"
#include "ddpood/interpolation.hpp"
#include "ddpood/io.hpp"
#include "ddpood/toyexample.hpp"

namespace {

using namespace ddpood;

Vec parse_point(const std::string& text) {
    Vec out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse coordinate '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty point");
    return out;
}

void emit(const std::string& path, const std::string& contents) {
    if (path.empty() || path == "-") {
        std::cout << contents;
    } else {
        write_file_atomic(path, contents);
    }
}

// Reads x0..x{d-1} columns; any other columns (label, split) are ignored.
std::vector<Vec> read_points_csv(const std::string& path) {
    std::stringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty sample file " + path);
    std::vector<int> coord_cols;
    {
        std::stringstream header(line);
        std::string name;
        for (int col = 0; std::getline(header, name, ','); ++col) {
            if (name.size() > 1 && name[0] == 'x' && name.find_first_not_of("0123456789", 1) == std::string::npos) {
                coord_cols.push_back(col);
            }
        }
    }
    if (coord_cols.empty()) throw FormatError("sample file has no x0, x1, ... columns");
    std::vector<Vec> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        Vec p;
        for (int c : coord_cols) {
            if (static_cast<std::size_t>(c) >= cells.size()) throw FormatError("short row in " + path);
            p.push_back(std::stod(cells[static_cast<std::size_t>(c)]));
        }
        points.push_back(std::move(p));
    }
    return points;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(std::stoi(item));
    return out;
}

int fail(const std::string& stage, const std::string& message) {
    std::cerr << "ddpood: " << stage << " failed: " << message << '\n';
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusion denoising OOD detection laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed_override;
    auto* run = app.add_subcommand("run", "Full pipeline: data, field, classifier, detection, metrics");
    run->add_option("-c,--config", config_path, "Experiment JSON (or a config.lock.json)")->required();
    run->add_option("-o,--output-dir", output_dir, "Override output_dir");
    run->add_option("--seed", seed_override, "Override the master seed");
    run->add_option("--set", overrides, "Override a key, e.g. detector.omega=2");

    int inv_T = 1000, inv_stride = 20, inv_points = 20;
    std::string inv_tmax = "200,400,600,800,1000", inv_methods = "ddim,pndm,pf", inv_out;
    std::uint64_t inv_seed = 0;
    auto* inv = app.add_subcommand("invertibility", "Round-trip error table over methods and t_max");
    inv->add_option("--T", inv_T, "Diffusion steps");
    inv->add_option("--stride", inv_stride, "Fixed step size");
    inv->add_option("--t-max", inv_tmax, "Comma-separated t_max values");
    inv->add_option("--methods", inv_methods, "Comma-separated methods");
    inv->add_option("--points", inv_points, "Points drawn from the canonical mixture");
    inv->add_option("--seed", inv_seed);
    inv->add_option("-o,--out", inv_out, "CSV path (stdout when omitted)");

    std::string ip_x1 = "2,0", ip_x2 = "-2,0", ip_mode = "asymmetric", ip_method = "ddim", ip_out;
    int ip_stride = 20, ip_points = 11, ip_T = 1000;
    auto* ip = app.add_subcommand("interpolate", "Interpolation sweep between two points on the canonical field");
    ip->add_option("--x1", ip_x1);
    ip->add_option("--x2", ip_x2);
    ip->add_option("--mode", ip_mode)->check(CLI::IsMember({"asymmetric", "symmetric"}));
    ip->add_option("--method", ip_method);
    ip->add_option("--stride", ip_stride);
    ip->add_option("--T", ip_T);
    ip->add_option("--points", ip_points, "Sweep size (t or sigma values, endpoints included)");
    ip->add_option("-o,--out", ip_out);

    std::string det_config, det_classifier, det_samples, det_denoiser, det_out;
    std::uint64_t det_seed = 0;
    auto* det = app.add_subcommand("detect", "Score a sample CSV with a saved classifier and field");
    det->add_option("-c,--config", det_config, "Experiment or lock JSON for schedule, mixture and detector")->required();
    det->add_option("--classifier", det_classifier, "classifier.json from a run")->required();
    det->add_option("--samples", det_samples, "CSV with x0, x1, ... columns")->required();
    det->add_option("--denoiser", det_denoiser, "denoiser.bin for a trained field");
    det->add_option("--seed", det_seed);
    det->add_option("-o,--out", det_out);

    std::size_t toy_n = 256, toy_budget = 2000;
    double toy_sigma = 0.5;
    std::uint64_t toy_seed = 0;
    std::string toy_witness;
    auto* toy = app.add_subcommand("toy", "Annihilator checks on the 1-D restricted detector");
    toy->add_option("--n", toy_n, "Grid resolution (power of two, >= 4)");
    toy->add_option("--sigma", toy_sigma, "Detector threshold");
    toy->add_option("--budget", toy_budget, "Random candidates per operator set");
    toy->add_option("--seed", toy_seed);
    toy->add_option("--witness-csv", toy_witness, "Write the identity-set witness here");

    std::string met_samples, met_out;
    auto* met = app.add_subcommand("metrics", "Recompute report.csv from samples.json");
    met->add_option("--samples", met_samples)->required();
    met->add_option("-o,--out", met_out);

    CLI11_PARSE(app, argc, argv);

    std::string stage = "config";
    try {
        if (run->parsed()) {
            if (!output_dir.empty()) overrides.push_back("output_dir=\"" + output_dir + "\"");
            if (seed_override) overrides.push_back("seed=" + std::to_string(*seed_override));
            const ExperimentConfig config = load_config(config_path, overrides);
            stage = "run";
            const RunResult result = run_experiment(config);
            for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << read_file(result.report_csv);
            return 0;
        }
        if (inv->parsed()) {
            auto schedule = std::make_shared<const NoiseSchedule>(default_schedule(inv_T));
            const MixtureField field(canonical_mixture(), schedule);
            std::vector<IntegratorMethod> methods;
            std::stringstream in(inv_methods);
            for (std::string m; std::getline(in, m, ',');) methods.push_back(parse_method(m));
            const auto tmax = parse_int_list(inv_tmax);
            stage = "invertibility";
            const auto rows = invertibility_table(field, canonical_mixture(), methods, tmax, inv_stride,
                                                  static_cast<std::size_t>(inv_points), inv_seed);
            emit(inv_out, invertibility_csv(rows));
            return 0;
        }
        if (ip->parsed()) {
            auto schedule = std::make_shared<const NoiseSchedule>(default_schedule(ip_T));
            const MixtureField field(canonical_mixture(), schedule);
            const Vec x1 = parse_point(ip_x1), x2 = parse_point(ip_x2);
            InterpolationSettings settings{parse_method(ip_method), ip_stride};
            if (ip_points < 2) throw ConfigError("a sweep needs at least two points");
            stage = "interpolate";
            std::vector<SweepRow> rows;
            if (ip_mode == "asymmetric") {
                std::vector<int> steps;
                const int cells = ip_T / ip_stride;
                for (int k = 0; k < ip_points; ++k) {
                    steps.push_back(static_cast<int>(std::lround(static_cast<double>(k) * cells / (ip_points - 1))) *
                                    ip_stride);
                }
                rows = asymmetric_sweep(field, x1, x2, steps, settings);
            } else {
                std::vector<double> sigmas;
                for (int k = 0; k < ip_points; ++k) sigmas.push_back(static_cast<double>(k) / (ip_points - 1));
                rows = symmetric_sweep(field, x1, x2, sigmas, settings);
            }
            emit(ip_out, sweep_csv(ip_mode, rows));
            return 0;
        }
        if (det->parsed()) {
            const ExperimentConfig config = load_config(det_config);
            auto schedule = std::make_shared<const NoiseSchedule>(make_schedule(config.schedule));
            stage = "load";
            const Classifier classifier = Classifier::load(det_classifier);
            std::unique_ptr<ScoreField> field;
            if (det_denoiser.empty()) {
                field = std::make_unique<MixtureField>(config.data.mixture, schedule);
            } else {
                field = std::make_unique<TrainedDenoiser>(TrainedDenoiser::load(det_denoiser, schedule));
            }
            const auto points = read_points_csv(det_samples);
            stage = "detect";
            const auto details = ddp_score_batch(points, config.detector, *field, classifier, det_seed, "detect");
            std::ostringstream out;
            out << "index,pseudo_label,ddp_score,decision\n";
            for (std::size_t i = 0; i < details.size(); ++i) {
                out << i << ',' << details[i].pseudo_label << ',' << format_double(details[i].score) << ','
                    << (decide(details[i].score, config.detector.threshold) == Decision::OOD ? "ood" : "ind") << '\n';
            }
            emit(det_out, out.str());
            return 0;
        }
        if (toy->parsed()) {
            stage = "toy";
            const SupportMask mask = SupportMask::standard(toy_n);
            const auto identity = identity_operators();
            const auto moving = moving_operators(toy_n);
            const auto mixing = dyadic_mixing_operators(toy_n);
            auto report = [&](const char* name, std::span<const ToyOperator> ops) {
                const auto v = annihilator_empty(toy_sigma, mask, ops, toy_budget, toy_seed);
                std::cout << name << ": " << (v.empty ? "annihilator empty" : "witness found") << " ("
                          << v.candidates_checked << " candidates)";
                if (v.witness) {
                    std::cout << ", witness |r| = " << format_double(v.witness->max_abs()) << ", verified "
                              << (verify_witness(*v.witness, mask, ops, toy_sigma) ? "yes" : "no");
                }
                std::cout << '\n';
                return v;
            };
            const auto id = report("identity", identity);
            report("moving {0, +-0.25}", moving);
            report("dyadic mixing", mixing);
            std::cout << "coverage of shifted masks: " << (shifts_cover(mask, moving) ? "complete" : "incomplete")
                      << '\n';
            if (!toy_witness.empty() && id.witness) write_file_atomic(toy_witness, grid_function_csv(*id.witness));
            return 0;
        }
        if (met->parsed()) {
            stage = "metrics";
            emit(met_out, recompute_report(met_samples));
            return 0;
        }
    } catch (const StageError& e) {
        return fail(e.stage(), e.what());
    } catch (const std::exception& e) {
        return fail(stage, e.what());
    }
    return 0;
}
