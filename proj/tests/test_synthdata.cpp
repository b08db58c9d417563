#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddpood/detector.hpp"
#include "ddpood/errors.hpp"
#include "ddpood/metrics.hpp"
#include "ddpood/random.hpp"
#include "ddpood/synthdata.hpp"

using namespace ddpood;

namespace {

double mean_pair_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    double s = 0;
    for (const Vec& p : a)
        for (const Vec& q : b) s += std::hypot(p[0] - q[0], p[1] - q[1]);
    return s / (static_cast<double>(a.size()) * b.size());
}

// Two-sample energy statistic 2E|X-Y| - E|X-X'| - E|Y-Y'|.
double energy(const std::vector<Vec>& x, const std::vector<Vec>& y) {
    return 2 * mean_pair_distance(x, y) - mean_pair_distance(x, x) - mean_pair_distance(y, y);
}

// 99th percentile of the statistic under random relabelling of the pooled sample.
double permutation_threshold(const std::vector<Vec>& x, const std::vector<Vec>& y, int rounds, std::uint64_t seed) {
    std::vector<Vec> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::mt19937_64 gen(seed);
    std::vector<double> stats;
    for (int r = 0; r < rounds; ++r) {
        std::shuffle(pooled.begin(), pooled.end(), gen);
        const std::vector<Vec> a(pooled.begin(), pooled.begin() + x.size());
        const std::vector<Vec> b(pooled.begin() + x.size(), pooled.end());
        stats.push_back(energy(a, b));
    }
    std::sort(stats.begin(), stats.end());
    return stats[static_cast<std::size_t>(0.99 * rounds)];
}

DatasetSpec mixture_spec(std::size_t n, std::uint64_t seed) {
    DatasetSpec s;
    s.kind = DatasetKind::Mixture;
    s.size = n;
    s.seed = seed;
    s.mixture = canonical_mixture();
    return s;
}

}  // namespace

TEST_SUITE("synthdata") {
    TEST_CASE("component proportions") {
        DatasetSpec s = mixture_spec(10000, 1);
        s.mixture = GaussianMixture::isotropic({0.2, 0.3, 0.5}, {{0, 0}, {5, 0}, {0, 5}}, 1.0);
        const auto data = sample_dataset(s);
        REQUIRE(data.size() == 10000);
        const double w[3] = {0.2, 0.3, 0.5};
        for (int k = 0; k < 3; ++k) {
            const double p = static_cast<double>(std::count(data.labels.begin(), data.labels.end(), k)) / 10000;
            CHECK(std::abs(p - w[k]) <= 3 * std::sqrt(w[k] * (1 - w[k]) / 10000));
        }
    }

    TEST_CASE("same seed, same bytes") {
        for (auto kind : {DatasetKind::Mixture, DatasetKind::Uniform, DatasetKind::Ring}) {
            DatasetSpec s = mixture_spec(200, 8);
            s.kind = kind;
            CHECK(samples_csv(sample_dataset(s), "x") == samples_csv(sample_dataset(s), "x"));
            DatasetSpec other = s;
            other.seed = 9;
            CHECK(sample_dataset(other).points != sample_dataset(s).points);
        }
        const auto a = canonical_benchmark(100, 50, 3), b = canonical_benchmark(100, 50, 3);
        CHECK(a.train.points == b.train.points);
        CHECK(a.ood_sets.size() == 3);
        for (std::size_t i = 0; i < a.ood_sets.size(); ++i) CHECK(a.ood_sets[i].second.points == b.ood_sets[i].second.points);
    }

    TEST_CASE("kind geometry") {
        DatasetSpec s = mixture_spec(500, 2);
        s.kind = DatasetKind::Uniform;
        for (const Vec& p : sample_dataset(s).points)
            for (double v : p) CHECK((v >= -6 && v <= 6));
        s.kind = DatasetKind::Ring;
        for (const Vec& p : sample_dataset(s).points) CHECK(std::hypot(p[0], p[1]) == doctest::Approx(5.0));
        s.kind = DatasetKind::TranslatedMixture;
        s.shift = {0, 4};
        double mean_y = 0;
        for (const Vec& p : sample_dataset(s).points) mean_y += p[1] / 500;
        CHECK(mean_y == doctest::Approx(4.0).epsilon(0.05));
        s.shift = {0};
        CHECK_THROWS_AS(sample_dataset(s), ConfigError);
        s = mixture_spec(0, 1);
        CHECK_THROWS_AS(sample_dataset(s), ConfigError);
        s = mixture_spec(10, 1);
        s.kind = DatasetKind::Uniform;
        s.low = 1;
        s.high = -1;
        CHECK_THROWS_AS(sample_dataset(s), ConfigError);
    }

    TEST_CASE("zero translation leaves the distribution alone") {
        const auto base = sample_dataset(mixture_spec(300, 11)).points;
        DatasetSpec s = mixture_spec(300, 12);
        s.kind = DatasetKind::TranslatedMixture;
        s.shift = {0, 0};
        const auto moved = sample_dataset(s).points;
        const double stat = energy(base, moved);
        const double threshold = permutation_threshold(base, moved, 200, 1);
        MESSAGE("energy " << stat << " vs permutation 99% " << threshold);
        CHECK(stat < threshold);
        s.shift = {0, 1};
        CHECK(energy(base, sample_dataset(s).points) > threshold);
    }

    TEST_CASE("adversarial set") {
        const auto bench = canonical_benchmark(1000, 300, 21);
        ClassifierConfig cc;
        cc.seed = 4;
        const Classifier clf = train_classifier(bench.train, cc);
        AdversarialSettings a;
        a.budget = 100000;
        a.target = 300;
        a.seed = 6;
        const auto mixture = canonical_mixture();
        const AdversarialSet adv = make_adversarial_ood(clf, bench.ind_test, mixture, a);
        REQUIRE(adv.points.size() == 300);
        CHECK_FALSE(adv.warning);

        std::vector<double> ind_max;
        for (const Vec& p : bench.ind_test.points) {
            const Vec l = clf.logits(p);
            ind_max.push_back(*std::max_element(l.begin(), l.end()));
        }
        std::sort(ind_max.begin(), ind_max.end());
        const std::size_t n = ind_max.size();
        const double median = n % 2 ? ind_max[n / 2] : 0.5 * (ind_max[n / 2 - 1] + ind_max[n / 2]);
        CHECK(adv.logit_floor == doctest::Approx(median).epsilon(1e-12));

        for (const Vec& p : adv.points.points) {
            const Vec l = clf.logits(p);
            CHECK(*std::max_element(l.begin(), l.end()) >= adv.logit_floor);
            CHECK(std::hypot(p[0] - 2, p[1]) >= 4.0);
            CHECK(std::hypot(p[0] + 2, p[1]) >= 4.0);
        }

        std::vector<double> mls_ind, mls_adv;
        for (const Vec& p : bench.ind_test.points) mls_ind.push_back(baseline_score(Baseline::MLS, p, clf));
        for (const Vec& p : adv.points.points) mls_adv.push_back(baseline_score(Baseline::MLS, p, clf));
        CHECK(auroc(mls_ind, mls_adv) <= 0.6);

        AdversarialSettings none = a;
        none.budget = 0;
        CHECK(make_adversarial_ood(clf, bench.ind_test, mixture, none).points.empty());

        AdversarialSettings tight = a;
        tight.budget = 50;
        tight.target = 1000;
        const AdversarialSet partial = make_adversarial_ood(clf, bench.ind_test, mixture, tight);
        CHECK(partial.points.size() < 1000);
        CHECK(partial.candidates_tried == 50);
        CHECK(partial.warning);
    }

    TEST_CASE("csv export") {
        LabeledSamples d;
        d.push_back({1.5, -2}, 1);
        CHECK(samples_csv(d, "train") == "x0,x1,label,split\n1.5,-2,1,train\n");
    }
}
