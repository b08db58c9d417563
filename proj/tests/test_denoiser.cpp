#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ddpood/denoiser.hpp"
#include "ddpood/errors.hpp"
#include "ddpood/random.hpp"

using namespace ddpood;

namespace {

std::shared_ptr<const NoiseSchedule> schedule() {
    static auto s = std::make_shared<const NoiseSchedule>(default_schedule());
    return s;
}

LabeledSamples normal_1d(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    LabeledSamples out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({rng.normal()});
    return out;
}

}  // namespace

TEST_SUITE("denoiser") {
    TEST_CASE("backpropagation matches finite differences") {
        DenoiserConfig cfg;
        cfg.hidden_width = 6;
        cfg.hidden_layers = 2;
        cfg.time_embedding = 4;
        cfg.class_embedding = 3;
        cfg.seed = 11;
        TrainedDenoiser model(schedule(), 2, 3, cfg);
        Rng rng(5);
        std::vector<DenoisingExample> batch;
        for (int i = 0; i < 5; ++i) {
            batch.push_back({rng.normal_vector(2), rng.integer(1, 1000), rng.normal_vector(2), i % 4 == 3 ? kNoLabel : i % 3});
        }
        for (LossWeighting w : {LossWeighting::Uniform, LossWeighting::Exact}) {
            std::vector<double> grad(model.parameters().size());
            model.loss_and_gradient(batch, w, grad);
            auto params = model.parameters();
            const double h = 1e-6;
            for (std::size_t i = 0; i < params.size(); i += 3) {
                const double keep = params[i];
                params[i] = keep + h;
                const double up = model.loss(batch, w);
                params[i] = keep - h;
                const double down = model.loss(batch, w);
                params[i] = keep;
                const double fd = (up - down) / (2 * h);
                CHECK(std::abs(grad[i] - fd) <= 1e-6 + 1e-4 * std::abs(fd));
            }
        }
    }

    TEST_CASE("zero epochs returns the initialization") {
        DenoiserConfig cfg;
        cfg.epochs = 0;
        cfg.seed = 3;
        const auto data = normal_1d(50, 1);
        const TrainedDenoiser trained = train_denoiser(data, schedule(), cfg);
        const TrainedDenoiser fresh(schedule(), 1, 0, cfg);
        CHECK(std::equal(trained.parameters().begin(), trained.parameters().end(), fresh.parameters().begin()));
    }

    TEST_CASE("same seed gives identical weights") {
        DenoiserConfig cfg;
        cfg.epochs = 3;
        cfg.hidden_width = 16;
        cfg.seed = 9;
        LabeledSamples data;
        Rng rng(2);
        for (int i = 0; i < 200; ++i) data.push_back({rng.normal(), rng.normal()}, i % 2);
        const auto a = train_denoiser(data, schedule(), cfg);
        const auto b = train_denoiser(data, schedule(), cfg);
        CHECK(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
        CHECK(a.is_conditional());
        CHECK(a.num_classes() == 2);
    }

    TEST_CASE("learns the standard normal noise predictor") {
        DenoiserConfig cfg;
        cfg.hidden_width = 64;
        cfg.epochs = 40;
        cfg.batch_size = 128;
        cfg.learning_rate = 2e-3;
        cfg.seed = 1;
        const auto data = normal_1d(4000, 7);
        const auto model = train_denoiser(data, schedule(), cfg);
        const auto held_out = normal_1d(500, 99);
        const TrainedDenoiser init(schedule(), 1, 0, cfg);
        CHECK(evaluate_denoiser_loss(model, held_out, LossWeighting::Uniform, 5) <
              evaluate_denoiser_loss(init, held_out, LossWeighting::Uniform, 5));
        // Exact answer for N(0, 1) data: eps = sqrt(1 - ab_t) x.
        double total = 0.0;
        int count = 0;
        for (int t = 50; t <= 1000; t += 50) {
            for (double x = -2.0; x <= 2.0001; x += 0.25) {
                const double exact = std::sqrt(1.0 - schedule()->alpha_bar(t)) * x;
                total += std::abs(model.eps(Vec{x}, t)[0] - exact);
                ++count;
            }
        }
        const double mae = total / count;
        MESSAGE("mean absolute error " << mae);
        CHECK(mae < 0.1);
    }

    TEST_CASE("diverging training names the epoch") {
        DenoiserConfig cfg;
        cfg.learning_rate = 1e300;
        cfg.epochs = 20;
        cfg.hidden_width = 8;
        const auto data = normal_1d(64, 3);
        try {
            train_denoiser(data, schedule(), cfg);
            FAIL("expected a training error");
        } catch (const TrainingError& e) {
            CHECK(e.epoch() >= 0);
            CHECK(e.epoch() < 20);
        }
    }

    TEST_CASE("save and load round trip, schedule mismatch rejected") {
        DenoiserConfig cfg;
        cfg.epochs = 1;
        cfg.hidden_width = 8;
        LabeledSamples data;
        Rng rng(8);
        for (int i = 0; i < 64; ++i) data.push_back({rng.normal(), rng.normal()}, i % 3);
        const auto model = train_denoiser(data, schedule(), cfg);
        const auto path = std::filesystem::temp_directory_path() / "ddpood_test_denoiser.bin";
        model.save(path);
        const auto loaded = TrainedDenoiser::load(path, schedule());
        CHECK(std::equal(model.parameters().begin(), model.parameters().end(), loaded.parameters().begin()));
        CHECK(loaded.record().epoch_losses == model.record().epoch_losses);
        const Vec x{0.3, 0.1};
        CHECK(loaded.eps(x, 100.0, 2) == model.eps(x, 100.0, 2));
        auto other = std::make_shared<const NoiseSchedule>(build_linear_schedule(1000, 1e-4, 0.03));
        CHECK_THROWS_AS(TrainedDenoiser::load(path, other), FormatError);
        std::filesystem::remove(path);
        CHECK_THROWS_AS(model.eps(x, 100.0, 5), ConfigError);
    }
}
