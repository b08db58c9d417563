#include "ddpood/detector.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "ddpood/errors.hpp"
#include "ddpood/io.hpp"
#include "ddpood/kernels.hpp"
#include "ddpood/metrics.hpp"

namespace ddpood {

void DetectorConfig::validate(const NoiseSchedule& schedule) const {
    if (timestep <= 0 || timestep > schedule.max_step()) throw ConfigError("detector timestep must lie in (0, T]");
    if (stride < 1 || timestep % stride != 0) {
        throw ConfigError("detector timestep " + std::to_string(timestep) + " is not on the stride-" +
                          std::to_string(stride) + " grid");
    }
    if (repeats < 1) throw ConfigError("detector needs at least one repeat");
    if (!std::isfinite(threshold)) throw ConfigError("decision threshold must be finite");
    if (!std::isfinite(omega)) throw ConfigError("guidance weight must be finite");
    if (!is_deterministic(method)) throw ConfigError("detector needs a deterministic integrator");
    if (clip) {
        if (detect_space != FeatureLevel::Feature) throw ConfigError("clipping applies to the feature level only");
        if (clip->per_coordinate.empty() && !(clip->threshold > 0.0)) {
            throw ConfigError("clip threshold must be positive");
        }
    }
}

Vec reconstruct_with_label(std::span<const double> x, int label, const DetectorConfig& config,
                           const ScoreField& field, Rng& rng) {
    const Vec noise = rng.normal_vector(x.size());
    const Vec noisy = forward_diffuse(x, config.timestep, noise, field.schedule());
    RunOptions options;
    options.method = config.method;
    options.condition = label;
    options.omega = config.omega;
    options.keep_states = false;
    return run_ddp(field, noisy, config.timestep, 0, config.stride, options).final_state();
}

Vec conditional_reconstruct(std::span<const double> x, const DetectorConfig& config, const ScoreField& field,
                            const Classifier& classifier, Rng& rng) {
    config.validate(field.schedule());
    return reconstruct_with_label(x, classifier.predict(x), config, field, rng);
}

namespace {

double feature_change(std::span<const double> a, std::span<const double> b, ChangeNorm norm) {
    return norm == ChangeNorm::L1 ? kernels::l1_distance(a, b) : std::sqrt(kernels::squared_distance(a, b));
}

double one_repeat(std::span<const double> x, std::span<const double> reference, int label,
                  const DetectorConfig& config, const ScoreField& field, const Classifier& classifier,
                  std::uint64_t seed, int r) {
    Rng rng(derive_seed(seed, "repeat-" + std::to_string(r)));
    const Vec recon = reconstruct_with_label(x, label, config, field, rng);
    const ClipRule* clip = config.clip ? &*config.clip : nullptr;
    const Vec after = classifier.extract(recon, config.detect_space, clip);
    return feature_change(reference, after, config.norm);
}

}  // namespace

double repeat_score(std::span<const double> x, const DetectorConfig& config, const ScoreField& field,
                    const Classifier& classifier, std::uint64_t seed, int r) {
    config.validate(field.schedule());
    const ClipRule* clip = config.clip ? &*config.clip : nullptr;
    const Vec before = classifier.extract(x, config.detect_space, clip);
    return one_repeat(x, before, classifier.predict(x), config, field, classifier, seed, r);
}

ScoreDetail ddp_score_detail(std::span<const double> x, const DetectorConfig& config, const ScoreField& field,
                             const Classifier& classifier, std::uint64_t seed) {
    config.validate(field.schedule());
    const ClipRule* clip = config.clip ? &*config.clip : nullptr;
    ScoreDetail out;
    out.pseudo_label = classifier.predict(x);
    const Vec before = classifier.extract(x, config.detect_space, clip);
    double total = 0.0;
    for (int r = 0; r < config.repeats; ++r) {
        const double s = one_repeat(x, before, out.pseudo_label, config, field, classifier, seed, r);
        out.repeat_scores.push_back(s);
        total += s;
    }
    out.score = total / static_cast<double>(config.repeats);
    return out;
}

double ddp_score(std::span<const double> x, const DetectorConfig& config, const ScoreField& field,
                 const Classifier& classifier, std::uint64_t seed) {
    return ddp_score_detail(x, config, field, classifier, seed).score;
}

std::vector<ScoreDetail> ddp_score_batch(std::span<const Vec> points, const DetectorConfig& config,
                                         const ScoreField& field, const Classifier& classifier, std::uint64_t seed,
                                         std::string_view label_prefix) {
    config.validate(field.schedule());
    std::vector<ScoreDetail> out(points.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                const std::uint64_t s = derive_seed(seed, std::string(label_prefix) + "/sample-" + std::to_string(i));
                out[i] = ddp_score_detail(points[i], config, field, classifier, s);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = points.size();
            }
        }
    };
    const std::size_t n_threads =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(points.size(), 1));
    {
        std::vector<std::jthread> pool;
        for (std::size_t k = 1; k < n_threads; ++k) pool.emplace_back(worker);
        worker();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

KnnIndex::KnnIndex(std::vector<Vec> reference, int k) : reference_(std::move(reference)), k_(k) {
    if (k_ < 1) throw ConfigError("KNN needs k >= 1");
    if (reference_.size() < static_cast<std::size_t>(k_)) throw ConfigError("KNN reference set smaller than k");
}

double KnnIndex::kth_distance(std::span<const double> query) const {
    std::vector<double> d2(reference_.size());
    for (std::size_t i = 0; i < reference_.size(); ++i) d2[i] = kernels::squared_distance(reference_[i], query);
    auto kth = d2.begin() + (k_ - 1);
    std::nth_element(d2.begin(), kth, d2.end());
    return std::sqrt(*kth);
}

std::string_view baseline_name(Baseline b) {
    switch (b) {
        case Baseline::MLS: return "mls";
        case Baseline::EBO: return "ebo";
        case Baseline::KNN: return "knn";
        case Baseline::ReAct: return "react";
    }
    return "unknown";
}

Baseline parse_baseline(std::string_view name) {
    if (name == "mls") return Baseline::MLS;
    if (name == "ebo") return Baseline::EBO;
    if (name == "knn") return Baseline::KNN;
    if (name == "react") return Baseline::ReAct;
    throw ConfigError("unknown baseline '" + std::string(name) + "'");
}

namespace {

double neg_logsumexp(std::span<const double> logits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double v : logits) total += std::exp(v - peak);
    return -(peak + std::log(total));
}

}  // namespace

double baseline_score(Baseline method, std::span<const double> x, const Classifier& classifier,
                      const KnnIndex* index, const ClipRule* clip) {
    switch (method) {
        case Baseline::MLS: {
            const Vec l = classifier.logits(x);
            return -*std::max_element(l.begin(), l.end());
        }
        case Baseline::EBO: return neg_logsumexp(classifier.logits(x));
        case Baseline::KNN:
            if (!index) throw ConfigError("KNN baseline needs a reference feature set");
            return index->kth_distance(classifier.features(x));
        case Baseline::ReAct:
            if (!clip) throw ConfigError("ReAct baseline needs a clip rule");
            return neg_logsumexp(classifier.logits(x, clip));
    }
    throw ConfigError("unknown baseline");
}

Decision decide(double score, double threshold) { return score > threshold ? Decision::OOD : Decision::InD; }

std::vector<MetricRow> metric_rows(std::span<const SampleRecord> records, std::string_view group) {
    std::vector<std::string> sets;
    for (const SampleRecord& r : records) {
        if (r.set != "ind" && std::find(sets.begin(), sets.end(), r.set) == sets.end()) sets.push_back(r.set);
    }
    std::vector<std::string> methods;
    for (const SampleRecord& r : records) {
        for (const auto& [name, value] : r.scores) {
            if (std::find(methods.begin(), methods.end(), name) == methods.end()) methods.push_back(name);
        }
    }
    std::sort(methods.begin(), methods.end());
    auto collect = [&](const std::string& set, const std::string& method) {
        std::vector<double> out;
        for (const SampleRecord& r : records) {
            if (r.set != set) continue;
            const auto it = r.scores.find(method);
            if (it == r.scores.end()) throw FormatError("sample record lacks a '" + method + "' score");
            out.push_back(it->second);
        }
        return out;
    };
    std::vector<MetricRow> rows;
    for (const std::string& method : methods) {
        const std::vector<double> ind = collect("ind", method);
        std::vector<double> aurocs, fprs;
        for (const std::string& set : sets) {
            const std::vector<double> ood = collect(set, method);
            MetricRow row{std::string(group), method, set, auroc(ind, ood), fpr_at_tpr(ind, ood, 0.95)};
            aurocs.push_back(row.auroc);
            fprs.push_back(row.fpr95);
            rows.push_back(std::move(row));
        }
        if (!sets.empty()) {
            const Summary a = summarize(aurocs);
            const Summary f = summarize(fprs);
            rows.push_back({std::string(group), method, "mean", a.mean, f.mean});
            rows.push_back({std::string(group), method, "std", a.std, f.std});
        }
    }
    return rows;
}

std::string metric_rows_csv(std::span<const MetricRow> rows) {
    std::ostringstream out;
    out << "group,method,ood_set,auroc,fpr95\n";
    for (const MetricRow& r : rows) {
        out << r.group << ',' << r.method << ',' << r.ood_set << ',' << format_double(r.auroc) << ','
            << format_double(r.fpr95) << '\n';
    }
    return out.str();
}

}  // namespace ddpood
