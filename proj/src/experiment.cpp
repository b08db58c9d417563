#include "ddpood/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddpood/errors.hpp"
#include "ddpood/io.hpp"
#include "ddpood/kernels.hpp"
#include "ddpood/random.hpp"

namespace ddpood {

using nlohmann::json;

std::string_view axis_name(AblationAxis axis) {
    switch (axis) {
        case AblationAxis::None: return "none";
        case AblationAxis::DetectSpace: return "detect_space";
        case AblationAxis::Omega: return "omega";
        case AblationAxis::Timestep: return "timestep";
        case AblationAxis::Repeat: return "repeat";
        case AblationAxis::Threshold: return "threshold";
    }
    return "unknown";
}

AblationAxis parse_axis(std::string_view name) {
    for (AblationAxis a : {AblationAxis::None, AblationAxis::DetectSpace, AblationAxis::Omega, AblationAxis::Timestep,
                           AblationAxis::Repeat, AblationAxis::Threshold}) {
        if (axis_name(a) == name) return a;
    }
    throw ConfigError("unknown ablation axis '" + std::string(name) + "'");
}

namespace {

// Reads keys from one JSON object and complains about anything left over.
class Section {
public:
    Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
        if (!obj_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    }

    template <typename T>
    void read(const char* key, T& target) {
        seen_.emplace_back(key);
        if (!obj_.contains(key) || obj_.at(key).is_null()) return;
        try {
            target = obj_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type: " + e.what());
        }
    }

    bool has(const char* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }
    const json& at(const char* key) {
        seen_.emplace_back(key);
        return obj_.at(key);
    }
    void mark(const char* key) { seen_.emplace_back(key); }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
                throw ConfigError("unknown config key '" + (name_.empty() ? key : name_ + "." + key) + "'");
            }
        }
    }

private:
    const json& obj_;
    std::string name_;
    std::vector<std::string> seen_;
};

LossWeighting parse_weighting(const std::string& s) {
    if (s == "uniform") return LossWeighting::Uniform;
    if (s == "exact") return LossWeighting::Exact;
    throw ConfigError("unknown loss weighting '" + s + "'");
}

ChangeNorm parse_norm(const std::string& s) {
    if (s == "l1") return ChangeNorm::L1;
    if (s == "l2") return ChangeNorm::L2;
    throw ConfigError("unknown feature-change norm '" + s + "'");
}

GaussianMixture parse_mixture(const json& j) {
    Section s(j, "data.mixture");
    std::vector<double> weights;
    std::vector<Vec> means;
    std::vector<int> labels;
    s.read("weights", weights);
    s.read("means", means);
    s.read("labels", labels);
    GaussianMixture mix;
    mix.weights = weights;
    mix.means = means;
    mix.labels = labels;
    if (s.has("covariances")) {
        const auto covs = s.at("covariances").get<std::vector<std::vector<Vec>>>();
        for (const auto& rows : covs) {
            Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != m.cols()) throw ConfigError("ragged covariance matrix");
                for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
            }
            mix.covariances.push_back(std::move(m));
        }
    } else {
        double variance = 1.0;
        s.read("variance", variance);
        mix = GaussianMixture::isotropic(weights, means, variance, labels);
    }
    s.mark("variance");
    s.finish();
    mix.validate();
    return mix;
}

json mixture_json(const GaussianMixture& mix) {
    std::vector<std::vector<Vec>> covs;
    for (const Matrix& m : mix.covariances) {
        std::vector<Vec> rows;
        for (std::size_t r = 0; r < m.rows(); ++r) rows.emplace_back(m.row(r).begin(), m.row(r).end());
        covs.push_back(std::move(rows));
    }
    return {{"weights", mix.weights}, {"means", mix.means}, {"covariances", covs}, {"labels", mix.labels}};
}

}  // namespace

ExperimentConfig parse_config(const json& document) {
    ExperimentConfig c;
    Section top(document, "");
    top.mark("lock");
    top.mark("description");
    top.read("seed", c.seed);
    std::string out_dir = c.output_dir.string();
    top.read("output_dir", out_dir);
    c.output_dir = out_dir;

    if (top.has("schedule")) {
        Section s(top.at("schedule"), "schedule");
        s.read("T", c.schedule.max_step);
        s.read("beta_start", c.schedule.beta_start);
        s.read("beta_end", c.schedule.beta_end);
        if (!s.has("beta_start") && !s.has("beta_end") && c.schedule.max_step != 1000) {
            const double scale = 1000.0 / c.schedule.max_step;
            c.schedule.beta_end = std::min(0.02 * scale, 0.999);
            c.schedule.beta_start = std::min(1e-4 * scale, c.schedule.beta_end);
        }
        s.finish();
    } else {
        top.mark("schedule");
    }

    c.data.mixture = canonical_mixture();
    if (top.has("data")) {
        Section s(top.at("data"), "data");
        if (s.has("mixture")) c.data.mixture = parse_mixture(s.at("mixture"));
        s.mark("mixture");
        s.read("n_train", c.data.n_train);
        s.read("n_per_set", c.data.n_per_set);
        s.read("ood_sets", c.data.ood_sets);
        s.read("translate_shift", c.data.translate_shift);
        s.read("uniform_low", c.data.uniform_low);
        s.read("uniform_high", c.data.uniform_high);
        s.read("ring_radius", c.data.ring_radius);
        s.read("adversarial_budget", c.data.adversarial_budget);
        s.finish();
    } else {
        top.mark("data");
    }
    for (const std::string& set : c.data.ood_sets) {
        if (set != "translate" && set != "uniform" && set != "ring" && set != "adversarial") {
            throw ConfigError("unknown OOD set '" + set + "'");
        }
    }
    if (c.data.n_train < 1 || c.data.n_per_set < 1) throw ConfigError("data sizes must be positive");

    if (top.has("field")) {
        Section s(top.at("field"), "field");
        s.read("source", c.field_source);
        if (s.has("denoiser")) {
            Section d(s.at("denoiser"), "field.denoiser");
            d.read("hidden_width", c.denoiser.hidden_width);
            d.read("hidden_layers", c.denoiser.hidden_layers);
            d.read("time_embedding", c.denoiser.time_embedding);
            d.read("class_embedding", c.denoiser.class_embedding);
            d.read("learning_rate", c.denoiser.learning_rate);
            d.read("epochs", c.denoiser.epochs);
            d.read("batch_size", c.denoiser.batch_size);
            std::string weighting = "uniform";
            d.read("weighting", weighting);
            c.denoiser.weighting = parse_weighting(weighting);
            d.read("condition_dropout", c.denoiser.condition_dropout);
            d.mark("seed");
            d.finish();
        }
        s.mark("denoiser");
        s.finish();
    } else {
        top.mark("field");
    }
    if (c.field_source != "analytic" && c.field_source != "trained") {
        throw ConfigError("field.source must be 'analytic' or 'trained'");
    }

    if (top.has("classifier")) {
        Section s(top.at("classifier"), "classifier");
        s.read("num_features", c.classifier.num_features);
        s.read("lengthscale", c.classifier.lengthscale);
        s.read("learning_rate", c.classifier.learning_rate);
        s.read("epochs", c.classifier.epochs);
        s.read("l2", c.classifier.l2);
        s.mark("seed");
        s.finish();
    } else {
        top.mark("classifier");
    }

    c.detector.timestep = -1;
    if (top.has("detector")) {
        Section s(top.at("detector"), "detector");
        s.read("timestep", c.detector.timestep);
        s.read("omega", c.detector.omega);
        s.read("repeats", c.detector.repeats);
        std::string space = "logit";
        s.read("detect_space", space);
        c.detector.detect_space = parse_level(space);
        if (s.has("clip")) c.detector.clip = ClipRule{s.at("clip").get<double>(), {}};
        s.mark("clip");
        std::string method = "ddim";
        s.read("method", method);
        c.detector.method = parse_method(method);
        s.read("stride", c.detector.stride);
        s.read("threshold", c.detector.threshold);
        std::string norm = "l1";
        s.read("norm", norm);
        c.detector.norm = parse_norm(norm);
        s.finish();
    } else {
        top.mark("detector");
    }
    if (c.detector.timestep < 0) {
        // 30% of T, snapped down to the stride grid.
        const int raw = static_cast<int>(std::lround(0.3 * c.schedule.max_step));
        c.detector.timestep = std::max(c.detector.stride, raw - raw % std::max(c.detector.stride, 1));
    }

    top.read("baselines", c.baselines);
    for (const std::string& b : c.baselines) parse_baseline(b);
    top.read("knn_k", c.knn_k);
    top.read("react_clip", c.react_clip);

    if (top.has("ablation")) {
        Section s(top.at("ablation"), "ablation");
        std::string axis = "none";
        s.read("axis", axis);
        c.ablation = parse_axis(axis);
        if (s.has("values")) c.ablation_values = s.at("values");
        s.mark("values");
        s.finish();
    } else {
        top.mark("ablation");
    }
    if (c.ablation != AblationAxis::None && (!c.ablation_values.is_array() || c.ablation_values.empty())) {
        throw ConfigError("ablation needs a nonempty value list");
    }
    if (c.ablation == AblationAxis::None && !c.ablation_values.empty()) {
        throw ConfigError("ablation values given without an axis");
    }
    top.finish();

    c.classifier.seed = derive_seed(c.seed, "classifier");
    c.denoiser.seed = derive_seed(c.seed, "denoiser");
    return c;
}

json to_json(const ExperimentConfig& c) {
    json detector = {{"timestep", c.detector.timestep},
                     {"omega", c.detector.omega},
                     {"repeats", c.detector.repeats},
                     {"detect_space", level_name(c.detector.detect_space)},
                     {"clip", c.detector.clip ? json(c.detector.clip->threshold) : json(nullptr)},
                     {"method", method_name(c.detector.method)},
                     {"stride", c.detector.stride},
                     {"threshold", c.detector.threshold},
                     {"norm", c.detector.norm == ChangeNorm::L1 ? "l1" : "l2"}};
    return {
        {"seed", c.seed},
        {"output_dir", c.output_dir.string()},
        {"schedule", {{"T", c.schedule.max_step}, {"beta_start", c.schedule.beta_start}, {"beta_end", c.schedule.beta_end}}},
        {"data",
         {{"mixture", mixture_json(c.data.mixture)},
          {"n_train", c.data.n_train},
          {"n_per_set", c.data.n_per_set},
          {"ood_sets", c.data.ood_sets},
          {"translate_shift", c.data.translate_shift},
          {"uniform_low", c.data.uniform_low},
          {"uniform_high", c.data.uniform_high},
          {"ring_radius", c.data.ring_radius},
          {"adversarial_budget", c.data.adversarial_budget}}},
        {"field",
         {{"source", c.field_source},
          {"denoiser",
           {{"hidden_width", c.denoiser.hidden_width},
            {"hidden_layers", c.denoiser.hidden_layers},
            {"time_embedding", c.denoiser.time_embedding},
            {"class_embedding", c.denoiser.class_embedding},
            {"learning_rate", c.denoiser.learning_rate},
            {"epochs", c.denoiser.epochs},
            {"batch_size", c.denoiser.batch_size},
            {"weighting", c.denoiser.weighting == LossWeighting::Uniform ? "uniform" : "exact"},
            {"condition_dropout", c.denoiser.condition_dropout},
            {"seed", c.denoiser.seed}}}}},
        {"classifier",
         {{"num_features", c.classifier.num_features},
          {"lengthscale", c.classifier.lengthscale},
          {"learning_rate", c.classifier.learning_rate},
          {"epochs", c.classifier.epochs},
          {"l2", c.classifier.l2},
          {"seed", c.classifier.seed}}},
        {"detector", detector},
        {"baselines", c.baselines},
        {"knn_k", c.knn_k},
        {"react_clip", c.react_clip},
        {"ablation", {{"axis", axis_name(c.ablation)}, {"values", c.ablation_values}}},
    };
}

void apply_override(json& document, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    json* node = &document;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("override path has an empty component: " + path);
        if (!node->is_object()) throw ConfigError("override path crosses a non-object: " + path);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    for (const std::string& o : overrides) apply_override(doc, o);
    return parse_config(doc);
}

NoiseSchedule make_schedule(const ScheduleConfig& config) {
    return build_linear_schedule(config.max_step, config.beta_start, config.beta_end);
}

namespace {

template <typename F>
auto stage(const std::string& name, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

json record_json(const SampleRecord& r) {
    json scores = json::object();
    for (const auto& [k, v] : r.scores) scores[k] = v;
    return {{"set", r.set},
            {"index", r.index},
            {"x", r.x},
            {"pseudo_label", r.pseudo_label},
            {"repeat_scores", r.repeat_scores},
            {"flagged_ood", r.flagged_ood},
            {"scores", scores}};
}

SampleRecord record_from_json(const json& j) {
    SampleRecord r;
    r.set = j.at("set").get<std::string>();
    r.index = j.at("index").get<std::size_t>();
    r.x = j.at("x").get<Vec>();
    r.pseudo_label = j.at("pseudo_label").get<int>();
    r.repeat_scores = j.at("repeat_scores").get<std::vector<double>>();
    r.flagged_ood = j.at("flagged_ood").get<bool>();
    for (const auto& [k, v] : j.at("scores").items()) r.scores[k] = v.get<double>();
    return r;
}

std::string group_label(AblationAxis axis, const json& value) {
    if (axis == AblationAxis::None) return "";
    std::string v;
    if (value.is_string()) {
        v = value.get<std::string>();
    } else if (value.is_number_integer()) {
        v = std::to_string(value.get<long long>());
    } else {
        v = value.dump();  // shortest round-trip form, so 0.3 stays "0.3"
    }
    return std::string(axis_name(axis)) + "=" + v;
}

DetectorConfig apply_axis(DetectorConfig cfg, AblationAxis axis, const json& value) {
    try {
        switch (axis) {
            case AblationAxis::None: break;
            case AblationAxis::DetectSpace:
                cfg.detect_space = parse_level(value.get<std::string>());
                if (cfg.detect_space != FeatureLevel::Feature) cfg.clip.reset();
                break;
            case AblationAxis::Omega: cfg.omega = value.get<double>(); break;
            case AblationAxis::Timestep: cfg.timestep = value.get<int>(); break;
            case AblationAxis::Repeat: cfg.repeats = value.get<int>(); break;
            case AblationAxis::Threshold:
                cfg.detect_space = FeatureLevel::Feature;
                cfg.clip = ClipRule{value.get<double>(), {}};
                break;
        }
    } catch (const json::exception& e) {
        throw ConfigError("ablation value of the wrong type: " + std::string(e.what()));
    }
    return cfg;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
    const std::filesystem::path dir = config.output_dir;
    // Everything lands in a staging directory first so a failed run leaves
    // earlier results untouched.
    const std::filesystem::path staging = dir / ".ddpood-partial";
    const std::vector<std::string> outputs = {"report.csv",      "samples.json",    "config.lock.json",
                                              "run_info.json",   "classifier.json", "denoiser.bin"};
    try {
        stage("write", [&] {
            std::filesystem::remove_all(staging);
            return std::filesystem::create_directories(staging);
        });
        RunResult result;
        auto schedule = stage("schedule", [&] { return std::make_shared<const NoiseSchedule>(make_schedule(config.schedule)); });
        stage("config", [&] {
            config.detector.validate(*schedule);
            for (const json& v : config.ablation_values) apply_axis(config.detector, config.ablation, v).validate(*schedule);
            return 0;
        });

        // Data: every set comes from its own labeled substream.
        LabeledSamples train, ind;
        std::vector<std::pair<std::string, LabeledSamples>> ood;
        stage("data", [&] {
            DatasetSpec spec;
            spec.kind = DatasetKind::Mixture;
            spec.mixture = config.data.mixture;
            spec.size = config.data.n_train;
            spec.seed = derive_seed(config.seed, "data/train");
            train = sample_dataset(spec);
            spec.size = config.data.n_per_set;
            spec.seed = derive_seed(config.seed, "data/ind-test");
            ind = sample_dataset(spec);
            for (const std::string& name : config.data.ood_sets) {
                DatasetSpec o;
                o.size = config.data.n_per_set;
                o.dim = config.data.mixture.dim();
                o.seed = derive_seed(config.seed, "data/" + name);
                if (name == "translate") {
                    o.kind = DatasetKind::TranslatedMixture;
                    o.mixture = config.data.mixture;
                    o.shift = config.data.translate_shift;
                } else if (name == "uniform") {
                    o.kind = DatasetKind::Uniform;
                    o.low = config.data.uniform_low;
                    o.high = config.data.uniform_high;
                } else if (name == "ring") {
                    o.kind = DatasetKind::Ring;
                    o.radius = config.data.ring_radius;
                } else {
                    continue;  // adversarial needs the classifier
                }
                ood.emplace_back(name, sample_dataset(o));
            }
            return 0;
        });

        std::unique_ptr<ScoreField> field;
        json run_info = json::object();
        stage("field", [&] {
            if (config.field_source == "analytic") {
                field = std::make_unique<MixtureField>(config.data.mixture, schedule);
            } else {
                auto model = std::make_unique<TrainedDenoiser>(train_denoiser(train, schedule, config.denoiser));
                model->save(staging / "denoiser.bin");
                run_info["denoiser_epoch_losses"] = model->record().epoch_losses;
                field = std::move(model);
            }
            return 0;
        });

        const Classifier classifier = stage("classifier", [&] { return train_classifier(train, config.classifier); });
        stage("classifier", [&] {
            classifier.save(staging / "classifier.json");
            return 0;
        });
        result.classifier_accuracy = classifier.training_accuracy();
        run_info["classifier_training_accuracy"] = classifier.training_accuracy();
        run_info["classifier_test_accuracy"] = classifier.accuracy(ind);

        if (std::find(config.data.ood_sets.begin(), config.data.ood_sets.end(), "adversarial") !=
            config.data.ood_sets.end()) {
            stage("adversarial", [&] {
                AdversarialSettings settings;
                settings.budget = config.data.adversarial_budget;
                settings.target = config.data.n_per_set;
                settings.seed = derive_seed(config.seed, "data/adversarial");
                AdversarialSet adv = make_adversarial_ood(classifier, train, config.data.mixture, settings);
                if (adv.warning) result.warnings.push_back(*adv.warning);
                if (adv.points.empty()) throw ConfigError("adversarial search found no points");
                run_info["adversarial_points"] = adv.points.size();
                run_info["adversarial_logit_floor"] = adv.logit_floor;
                // Keep the configured set order.
                auto pos = ood.begin();
                for (const std::string& name : config.data.ood_sets) {
                    if (name == "adversarial") break;
                    if (pos != ood.end() && pos->first == name) ++pos;
                }
                ood.insert(pos, {"adversarial", std::move(adv.points)});
                return 0;
            });
        }

        // Baseline scores do not depend on the detector configuration.
        std::vector<std::pair<std::string, const LabeledSamples*>> all_sets = {{"ind", &ind}};
        for (const auto& [name, data] : ood) all_sets.emplace_back(name, &data);
        std::vector<std::vector<std::map<std::string, double>>> baseline_scores;
        stage("baselines", [&] {
            std::vector<Vec> reference;
            for (const Vec& p : train.points) reference.push_back(classifier.features(p));
            const KnnIndex knn(std::move(reference), config.knn_k);
            const ClipRule react{config.react_clip, {}};
            for (const auto& [name, data] : all_sets) {
                auto& per_set = baseline_scores.emplace_back();
                for (const Vec& p : data->points) {
                    std::map<std::string, double> s;
                    for (const std::string& b : config.baselines) {
                        s[b] = baseline_score(parse_baseline(b), p, classifier, &knn, &react);
                    }
                    per_set.push_back(std::move(s));
                }
            }
            return 0;
        });

        json groups = json::array();
        std::vector<json> group_values =
            config.ablation == AblationAxis::None ? std::vector<json>{json(nullptr)}
                                                  : std::vector<json>(config.ablation_values.begin(), config.ablation_values.end());
        for (const json& value : group_values) {
            const DetectorConfig cfg = apply_axis(config.detector, config.ablation, value);
            const std::string group = group_label(config.ablation, value);
            std::vector<SampleRecord> records;
            stage("detector", [&] {
                const std::uint64_t detector_seed = derive_seed(config.seed, "detector");
                for (std::size_t s = 0; s < all_sets.size(); ++s) {
                    const auto& [name, data] = all_sets[s];
                    const auto details = ddp_score_batch(data->points, cfg, *field, classifier, detector_seed, name);
                    for (std::size_t i = 0; i < data->size(); ++i) {
                        SampleRecord r;
                        r.set = name;
                        r.index = i;
                        r.x = data->points[i];
                        r.pseudo_label = details[i].pseudo_label;
                        r.repeat_scores = details[i].repeat_scores;
                        r.flagged_ood = decide(details[i].score, cfg.threshold) == Decision::OOD;
                        r.scores = baseline_scores[s][i];
                        r.scores["ddp"] = details[i].score;
                        records.push_back(std::move(r));
                    }
                }
                return 0;
            });
            stage("evaluate", [&] {
                const auto rows = metric_rows(records, group);
                result.rows.insert(result.rows.end(), rows.begin(), rows.end());
                return 0;
            });
            json recs = json::array();
            for (const SampleRecord& r : records) recs.push_back(record_json(r));
            groups.push_back({{"group", group}, {"records", std::move(recs)}});
        }

        stage("write", [&] {
            write_file_atomic(staging / "report.csv", metric_rows_csv(result.rows));
            const json samples = {{"format", "ddpood-samples"}, {"version", 1}, {"groups", std::move(groups)}};
            write_file_atomic(staging / "samples.json", samples.dump() + "\n");
            json lock = to_json(config);
            lock["lock"] = {{"version", kVersion},
                            {"samples_format", 1},
                            {"schedule_fingerprint", schedule->fingerprint()},
                            {"seeds",
                             {{"data/train", derive_seed(config.seed, "data/train")},
                              {"data/ind-test", derive_seed(config.seed, "data/ind-test")},
                              {"detector", derive_seed(config.seed, "detector")},
                              {"classifier", config.classifier.seed},
                              {"denoiser", config.denoiser.seed}}},
                            {"kernels", kernels::active().isa}};
            write_file_atomic(staging / "config.lock.json", lock.dump(2) + "\n");
            run_info["warnings"] = result.warnings;
            write_file_atomic(staging / "run_info.json", run_info.dump(2) + "\n");
            for (const std::string& name : outputs) {
                if (std::filesystem::exists(staging / name)) {
                    std::filesystem::rename(staging / name, dir / name);
                } else {
                    std::filesystem::remove(dir / name);  // stale file from an earlier run
                }
            }
            std::filesystem::remove(staging);
            return 0;
        });
        result.report_csv = dir / "report.csv";
        result.samples_json = dir / "samples.json";
        result.lock_json = dir / "config.lock.json";
        return result;
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove_all(staging, ec);
        if (std::filesystem::is_empty(dir, ec)) std::filesystem::remove(dir, ec);
        throw;
    }
}

std::string recompute_report(const std::filesystem::path& samples_json) {
    json doc;
    try {
        doc = json::parse(read_file(samples_json));
    } catch (const json::exception& e) {
        throw FormatError("cannot parse " + samples_json.string() + ": " + e.what());
    }
    if (doc.value("format", "") != "ddpood-samples") throw FormatError("not a samples file: " + samples_json.string());
    std::vector<MetricRow> rows;
    try {
        for (const json& g : doc.at("groups")) {
            std::vector<SampleRecord> records;
            for (const json& r : g.at("records")) records.push_back(record_from_json(r));
            const auto part = metric_rows(records, g.at("group").get<std::string>());
            rows.insert(rows.end(), part.begin(), part.end());
        }
    } catch (const json::exception& e) {
        throw FormatError("malformed samples file: " + std::string(e.what()));
    }
    return metric_rows_csv(rows);
}

std::vector<InvertibilityRow> invertibility_table(const ScoreField& field, const GaussianMixture& mixture,
                                                  std::span<const IntegratorMethod> methods,
                                                  std::span<const int> t_max_values, int stride,
                                                  std::size_t n_points, std::uint64_t seed) {
    DatasetSpec spec;
    spec.mixture = mixture;
    spec.size = n_points;
    spec.seed = derive_seed(seed, "invertibility/points");
    const LabeledSamples points = sample_dataset(spec);
    std::vector<InvertibilityRow> rows;
    for (IntegratorMethod m : methods) {
        for (int t_max : t_max_values) {
            double total = 0.0, worst = 0.0;
            for (const Vec& p : points.points) {
                const double e = reconstruction_error(field, p, t_max, stride, m);
                total += e;
                worst = std::max(worst, e);
            }
            rows.push_back({std::string(method_name(m)), t_max, stride, total / static_cast<double>(n_points), worst});
        }
    }
    return rows;
}

std::string invertibility_csv(std::span<const InvertibilityRow> rows) {
    std::ostringstream out;
    out << "method,t_max,stride,mean_error,max_error\n";
    for (const auto& r : rows) {
        out << r.method << ',' << r.t_max << ',' << r.stride << ',' << format_double(r.mean_error) << ','
            << format_double(r.max_error) << '\n';
    }
    return out.str();
}

}  // namespace ddpood
