#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "ddpood/dataset.hpp"
#include "ddpood/scorefield.hpp"

namespace ddpood {

enum class LossWeighting {
    Uniform,  // weight 1 ("simple" loss)
    Exact,    // beta_t^2 / (alpha_t (1 - alpha_bar_t))
};

struct DenoiserConfig {
    int hidden_width = 128;
    int hidden_layers = 2;
    int time_embedding = 16;
    int class_embedding = 8;
    double learning_rate = 1e-3;
    int epochs = 100;
    int batch_size = 128;
    std::uint64_t seed = 0;
    LossWeighting weighting = LossWeighting::Uniform;
    /// Probability of replacing the label with the null token during training.
    double condition_dropout = 0.1;
};

struct TrainingRecord {
    std::uint64_t seed = 0;
    std::vector<double> epoch_losses;
};

/// One supervised example of the noise-prediction objective.
struct DenoisingExample {
    Vec x0;
    int t;
    Vec noise;
    int label;  // kNoLabel selects the null token
};

double loss_weight(const NoiseSchedule& schedule, int t, LossWeighting weighting);

/// Fully connected noise predictor: [x, sinusoidal time embedding, class
/// embedding] -> SiLU hidden layers -> eps. Class index `num_classes` is the
/// null token used for unconditional evaluation.
class TrainedDenoiser final : public ScoreField {
public:
    TrainedDenoiser(std::shared_ptr<const NoiseSchedule> schedule, std::size_t dim, int num_classes,
                    const DenoiserConfig& config);

    std::size_t dim() const override { return dim_; }
    bool is_conditional() const override { return num_classes_ > 0; }
    void eps(std::span<const double> x, double t, Label label, std::span<double> out) const override;

    using ScoreField::eps;

    int num_classes() const noexcept { return num_classes_; }
    std::span<const double> parameters() const noexcept { return params_; }
    std::span<double> parameters() noexcept { return params_; }
    const TrainingRecord& record() const noexcept { return record_; }
    TrainingRecord& record() noexcept { return record_; }

    /// Mean weighted squared error over the batch; accumulates d loss / d params into `grad`.
    double loss_and_gradient(std::span<const DenoisingExample> batch, LossWeighting weighting,
                             std::span<double> grad) const;
    double loss(std::span<const DenoisingExample> batch, LossWeighting weighting) const;

    void save(const std::filesystem::path& path) const;
    /// Throws FormatError on a bad header or when the stored schedule hash differs.
    static TrainedDenoiser load(const std::filesystem::path& path, std::shared_ptr<const NoiseSchedule> schedule);

private:
    struct Dense {
        std::size_t in;
        std::size_t out;
        std::size_t weight_offset;
        std::size_t bias_offset;
    };
    struct Activations;

    void build_layout();
    void embed_input(std::span<const double> x, double t, int class_index, std::span<double> input) const;
    void forward(std::span<const double> x, double t, int class_index, Activations& acts) const;
    int class_index(Label label) const;

    std::size_t dim_;
    int num_classes_;
    DenoiserConfig config_;
    std::size_t input_width_ = 0;
    std::size_t embedding_offset_ = 0;
    std::vector<Dense> layers_;
    std::vector<double> params_;
    TrainingRecord record_;
};

/// Adam on the noise-prediction objective with random label dropout to the
/// null token. Throws TrainingError naming the epoch if the loss turns NaN.
TrainedDenoiser train_denoiser(const LabeledSamples& data, std::shared_ptr<const NoiseSchedule> schedule,
                               const DenoiserConfig& config);

/// Fixed-draw objective estimate for held-out comparisons.
double evaluate_denoiser_loss(const TrainedDenoiser& model, const LabeledSamples& data, LossWeighting weighting,
                              std::uint64_t seed, int draws_per_point = 4);

}  // namespace ddpood
