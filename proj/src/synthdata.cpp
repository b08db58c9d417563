#include "ddpood/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ddpood/errors.hpp"
#include "ddpood/io.hpp"
#include "ddpood/kernels.hpp"
#include "ddpood/random.hpp"

namespace ddpood {

std::string_view kind_name(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::Mixture: return "mixture";
        case DatasetKind::TranslatedMixture: return "translated-mixture";
        case DatasetKind::Uniform: return "isotropic-uniform";
        case DatasetKind::Ring: return "ring";
    }
    return "unknown";
}

DatasetKind parse_kind(std::string_view name) {
    if (name == "mixture") return DatasetKind::Mixture;
    if (name == "translated-mixture") return DatasetKind::TranslatedMixture;
    if (name == "isotropic-uniform" || name == "uniform") return DatasetKind::Uniform;
    if (name == "ring") return DatasetKind::Ring;
    throw ConfigError("unknown dataset kind '" + std::string(name) + "'");
}

void DatasetSpec::validate() const {
    if (size < 1) throw ConfigError("dataset size must be at least 1");
    switch (kind) {
        case DatasetKind::Mixture: mixture.validate(); break;
        case DatasetKind::TranslatedMixture:
            mixture.validate();
            if (shift.size() != mixture.dim()) throw ConfigError("shift dimension differs from the mixture");
            break;
        case DatasetKind::Uniform:
            if (dim < 1 || !(low < high)) throw ConfigError("uniform box needs dim >= 1 and low < high");
            break;
        case DatasetKind::Ring:
            if (dim < 2 || !(radius > 0.0)) throw ConfigError("ring needs dim >= 2 and a positive radius");
            break;
    }
}

namespace {

LabeledSamples sample_mixture(const GaussianMixture& mix, std::size_t n, Rng& rng) {
    std::vector<Matrix> chol;
    for (const Matrix& c : mix.covariances) chol.push_back(cholesky(c));
    std::vector<double> cumulative(mix.size());
    std::partial_sum(mix.weights.begin(), mix.weights.end(), cumulative.begin());
    LabeledSamples out;
    const std::size_t d = mix.dim();
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform() * cumulative.back();
        const auto k = static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin(),
                                     static_cast<std::ptrdiff_t>(mix.size()) - 1));
        const Vec z = rng.normal_vector(d);
        Vec x = mix.means[k];
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c <= r; ++c) x[r] += chol[k](r, c) * z[c];
        }
        out.push_back(std::move(x), mix.labeled() ? mix.labels[k] : static_cast<int>(k));
    }
    return out;
}

}  // namespace

LabeledSamples sample_dataset(const DatasetSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    switch (spec.kind) {
        case DatasetKind::Mixture: return sample_mixture(spec.mixture, spec.size, rng);
        case DatasetKind::TranslatedMixture: {
            LabeledSamples out = sample_mixture(spec.mixture, spec.size, rng);
            for (Vec& p : out.points) kernels::axpy(1.0, spec.shift, p);
            return out;
        }
        case DatasetKind::Uniform: {
            LabeledSamples out;
            for (std::size_t i = 0; i < spec.size; ++i) {
                Vec x(spec.dim);
                for (double& v : x) v = rng.uniform(spec.low, spec.high);
                out.push_back(std::move(x));
            }
            return out;
        }
        case DatasetKind::Ring: {
            LabeledSamples out;
            for (std::size_t i = 0; i < spec.size; ++i) {
                const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
                Vec x(spec.dim, 0.0);
                x[0] = spec.radius * std::cos(angle);
                x[1] = spec.radius * std::sin(angle);
                out.push_back(std::move(x));
            }
            return out;
        }
    }
    throw ConfigError("unknown dataset kind");
}

AdversarialSet make_adversarial_ood(const Classifier& classifier, const LabeledSamples& ind,
                                    const GaussianMixture& mixture, const AdversarialSettings& settings) {
    AdversarialSet out;
    if (settings.budget == 0 || settings.target == 0) return out;
    if (ind.empty()) throw ConfigError("adversarial search needs InD reference points");
    mixture.validate();

    std::vector<double> max_logits;
    for (const Vec& p : ind.points) {
        const Vec l = classifier.logits(p);
        max_logits.push_back(*std::max_element(l.begin(), l.end()));
    }
    std::sort(max_logits.begin(), max_logits.end());
    const double pos = settings.logit_quantile * static_cast<double>(max_logits.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, max_logits.size() - 1);
    out.logit_floor = max_logits[lo] + (pos - static_cast<double>(lo)) * (max_logits[hi] - max_logits[lo]);

    // Component scale: square root of the largest covariance diagonal entry.
    std::vector<double> sigmas;
    for (const Matrix& c : mixture.covariances) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.rows(); ++i) s = std::max(s, c(i, i));
        sigmas.push_back(std::sqrt(s));
    }
    const double sigma_max = *std::max_element(sigmas.begin(), sigmas.end());

    Rng rng(settings.seed);
    const Matrix& freq = classifier.frequencies();
    const std::size_t d = classifier.dim();
    Vec direction(d);
    for (std::size_t tried = 0; tried < settings.budget && out.points.size() < settings.target; ++tried) {
        ++out.candidates_tried;
        const Vec& start = ind.points[rng.index(ind.size())];
        const auto row = freq.row(rng.index(freq.rows()));
        const double norm = l2_norm(row);
        if (norm == 0.0) continue;
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < d; ++i) direction[i] = sign * row[i] / norm;
        const double step = rng.uniform(settings.far_sigmas, settings.max_radius_sigmas) * sigma_max;
        Vec candidate(start);
        kernels::axpy(step, direction, candidate);

        bool far = true;
        for (std::size_t k = 0; k < mixture.size() && far; ++k) {
            far = std::sqrt(kernels::squared_distance(candidate, mixture.means[k])) >= settings.far_sigmas * sigmas[k];
        }
        if (!far) continue;
        const Vec l = classifier.logits(candidate);
        if (*std::max_element(l.begin(), l.end()) < out.logit_floor) continue;
        out.points.push_back(std::move(candidate));
    }
    if (out.points.size() < settings.target) {
        out.warning = "adversarial search found " + std::to_string(out.points.size()) + " of " +
                      std::to_string(settings.target) + " points within a budget of " +
                      std::to_string(settings.budget);
    }
    return out;
}

GaussianMixture canonical_mixture() {
    return GaussianMixture::isotropic({0.5, 0.5}, {{2.0, 0.0}, {-2.0, 0.0}}, 1.0, {0, 1});
}

Benchmark canonical_benchmark(std::size_t n_train, std::size_t n_per_set, std::uint64_t seed) {
    Benchmark b;
    DatasetSpec spec;
    spec.mixture = canonical_mixture();
    spec.kind = DatasetKind::Mixture;
    spec.size = n_train;
    spec.seed = derive_seed(seed, "data/train");
    b.train = sample_dataset(spec);
    spec.size = n_per_set;
    spec.seed = derive_seed(seed, "data/ind-test");
    b.ind_test = sample_dataset(spec);

    DatasetSpec translate = spec;
    translate.kind = DatasetKind::TranslatedMixture;
    translate.shift = {0.0, 4.0};
    translate.seed = derive_seed(seed, "data/translate");
    b.ood_sets.emplace_back("translate", sample_dataset(translate));

    DatasetSpec uniform;
    uniform.kind = DatasetKind::Uniform;
    uniform.size = n_per_set;
    uniform.dim = 2;
    uniform.seed = derive_seed(seed, "data/uniform");
    b.ood_sets.emplace_back("uniform", sample_dataset(uniform));

    DatasetSpec ring;
    ring.kind = DatasetKind::Ring;
    ring.size = n_per_set;
    ring.dim = 2;
    ring.seed = derive_seed(seed, "data/ring");
    b.ood_sets.emplace_back("ring", sample_dataset(ring));
    return b;
}

std::string samples_csv(const LabeledSamples& data, std::string_view split) {
    std::ostringstream out;
    for (std::size_t i = 0; i < data.dim(); ++i) out << 'x' << i << ',';
    out << "label,split\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.points[i]) out << format_double(v) << ',';
        out << data.label(i) << ',' << split << '\n';
    }
    return out.str();
}

}  // namespace ddpood
