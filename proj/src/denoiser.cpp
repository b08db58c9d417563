#include "ddpood/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "ddpood/errors.hpp"
#include "ddpood/kernels.hpp"
#include "ddpood/random.hpp"

namespace ddpood {

namespace {

constexpr char kMagic[8] = {'D', 'D', 'P', 'O', 'D', 'E', 'N', '1'};
constexpr std::uint32_t kFormatVersion = 1;

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double silu(double z) { return z * sigmoid(z); }

inline double silu_derivative(double z) {
    const double s = sigmoid(z);
    return s * (1.0 + z * (1.0 - s));
}

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw FormatError("denoiser file truncated");
    return value;
}

}  // namespace

struct TrainedDenoiser::Activations {
    Vec input;
    std::vector<Vec> pre;   // z per layer
    std::vector<Vec> post;  // activation per hidden layer; last entry is the output
};

double loss_weight(const NoiseSchedule& schedule, int t, LossWeighting weighting) {
    if (weighting == LossWeighting::Uniform) return 1.0;
    const double beta = schedule.beta(t);
    return beta * beta / (schedule.alpha(t) * (1.0 - schedule.alpha_bar(t)));
}

TrainedDenoiser::TrainedDenoiser(std::shared_ptr<const NoiseSchedule> schedule, std::size_t dim, int num_classes,
                                 const DenoiserConfig& config)
    : ScoreField(std::move(schedule)), dim_(dim), num_classes_(num_classes), config_(config) {
    if (dim_ == 0) throw ConfigError("denoiser dimension must be positive");
    if (num_classes_ < 0) throw ConfigError("class count must be non-negative");
    if (config_.hidden_width < 1 || config_.hidden_layers < 1) throw ConfigError("denoiser needs hidden layers");
    if (config_.time_embedding < 2 || config_.time_embedding % 2 != 0) {
        throw ConfigError("time embedding width must be a positive even number");
    }
    if (num_classes_ > 0 && config_.class_embedding < 1) throw ConfigError("class embedding width must be positive");
    build_layout();

    Rng rng(config_.seed);
    for (const Dense& layer : layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
        for (std::size_t i = 0; i < layer.in * layer.out; ++i) params_[layer.weight_offset + i] = rng.uniform(-bound, bound);
        for (std::size_t i = 0; i < layer.out; ++i) params_[layer.bias_offset + i] = rng.uniform(-bound, bound);
    }
    if (num_classes_ > 0) {
        const std::size_t n = static_cast<std::size_t>(num_classes_ + 1) * static_cast<std::size_t>(config_.class_embedding);
        for (std::size_t i = 0; i < n; ++i) params_[embedding_offset_ + i] = rng.normal();
    }
    record_.seed = config_.seed;
}

void TrainedDenoiser::build_layout() {
    input_width_ = dim_ + static_cast<std::size_t>(config_.time_embedding) +
                   (num_classes_ > 0 ? static_cast<std::size_t>(config_.class_embedding) : 0);
    const auto width = static_cast<std::size_t>(config_.hidden_width);
    std::size_t offset = 0;
    std::size_t in = input_width_;
    layers_.clear();
    for (int l = 0; l <= config_.hidden_layers; ++l) {
        const std::size_t out = l == config_.hidden_layers ? dim_ : width;
        layers_.push_back({in, out, offset, offset + in * out});
        offset += in * out + out;
        in = out;
    }
    embedding_offset_ = offset;
    if (num_classes_ > 0) {
        offset += static_cast<std::size_t>(num_classes_ + 1) * static_cast<std::size_t>(config_.class_embedding);
    }
    params_.assign(offset, 0.0);
}

int TrainedDenoiser::class_index(Label label) const {
    if (!label || *label == kNoLabel) return num_classes_;
    if (num_classes_ == 0) throw ConfigError("conditional evaluation of an unconditional denoiser");
    if (*label < 0 || *label >= num_classes_) {
        throw ConfigError("label " + std::to_string(*label) + " outside the denoiser's classes");
    }
    return *label;
}

void TrainedDenoiser::embed_input(std::span<const double> x, double t, int class_idx, std::span<double> input) const {
    std::copy(x.begin(), x.end(), input.begin());
    const int half = config_.time_embedding / 2;
    for (int k = 0; k < half; ++k) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
        input[dim_ + static_cast<std::size_t>(k)] = std::sin(t * freq);
        input[dim_ + static_cast<std::size_t>(half + k)] = std::cos(t * freq);
    }
    if (num_classes_ > 0) {
        const auto width = static_cast<std::size_t>(config_.class_embedding);
        const double* row = params_.data() + embedding_offset_ + static_cast<std::size_t>(class_idx) * width;
        std::copy(row, row + width, input.begin() + static_cast<std::ptrdiff_t>(dim_) + config_.time_embedding);
    }
}

void TrainedDenoiser::forward(std::span<const double> x, double t, int class_idx, Activations& acts) const {
    acts.input.assign(input_width_, 0.0);
    embed_input(x, t, class_idx, acts.input);
    acts.pre.resize(layers_.size());
    acts.post.resize(layers_.size());
    std::span<const double> current = acts.input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Dense& layer = layers_[l];
        Vec& z = acts.pre[l];
        z.resize(layer.out);
        const double* w = params_.data() + layer.weight_offset;
        for (std::size_t j = 0; j < layer.out; ++j) {
            z[j] = params_[layer.bias_offset + j] +
                   kernels::dot({w + j * layer.in, layer.in}, current);
        }
        Vec& h = acts.post[l];
        h = z;
        if (l + 1 < layers_.size()) {
            for (double& v : h) v = silu(v);
        }
        current = h;
    }
}

void TrainedDenoiser::eps(std::span<const double> x, double t, Label label, std::span<double> out) const {
    if (x.size() != dim_ || out.size() != dim_) throw DimensionError("denoiser: dimension mismatch");
    if (!(t >= 0.0 && t <= static_cast<double>(schedule().max_step()))) {
        throw IndexError("denoiser: time outside [0, T]");
    }
    Activations acts;
    forward(x, t, class_index(label), acts);
    std::copy(acts.post.back().begin(), acts.post.back().end(), out.begin());
}

double TrainedDenoiser::loss(std::span<const DenoisingExample> batch, LossWeighting weighting) const {
    double total = 0.0;
    Activations acts;
    for (const DenoisingExample& ex : batch) {
        const double ab = schedule().alpha_bar(ex.t);
        Vec xt(dim_);
        kernels::axpby(std::sqrt(ab), ex.x0, std::sqrt(1.0 - ab), ex.noise, xt);
        forward(xt, ex.t, class_index(ex.label == kNoLabel ? Label{} : Label{ex.label}), acts);
        const double w = loss_weight(schedule(), ex.t, weighting);
        total += w * kernels::squared_distance(acts.post.back(), ex.noise);
    }
    return total / static_cast<double>(batch.size());
}

double TrainedDenoiser::loss_and_gradient(std::span<const DenoisingExample> batch, LossWeighting weighting,
                                          std::span<double> grad) const {
    if (grad.size() != params_.size()) throw DimensionError("gradient buffer has wrong size");
    std::fill(grad.begin(), grad.end(), 0.0);
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    Activations acts;
    Vec xt(dim_);
    Vec upstream;
    Vec downstream;
    for (const DenoisingExample& ex : batch) {
        const double ab = schedule().alpha_bar(ex.t);
        kernels::axpby(std::sqrt(ab), ex.x0, std::sqrt(1.0 - ab), ex.noise, xt);
        const int cls = class_index(ex.label == kNoLabel ? Label{} : Label{ex.label});
        forward(xt, ex.t, cls, acts);
        const double w = loss_weight(schedule(), ex.t, weighting);
        const Vec& out = acts.post.back();
        upstream.assign(dim_, 0.0);
        for (std::size_t i = 0; i < dim_; ++i) {
            const double diff = out[i] - ex.noise[i];
            total += w * diff * diff;
            upstream[i] = 2.0 * w * diff * inv_batch;
        }
        for (std::size_t l = layers_.size(); l-- > 0;) {
            const Dense& layer = layers_[l];
            if (l + 1 < layers_.size()) {
                const Vec& z = acts.pre[l];
                for (std::size_t j = 0; j < layer.out; ++j) upstream[j] *= silu_derivative(z[j]);
            }
            std::span<const double> layer_in = l == 0 ? std::span<const double>(acts.input)
                                                      : std::span<const double>(acts.post[l - 1]);
            double* gw = grad.data() + layer.weight_offset;
            const double* w_data = params_.data() + layer.weight_offset;
            downstream.assign(layer.in, 0.0);
            for (std::size_t j = 0; j < layer.out; ++j) {
                const double g = upstream[j];
                grad[layer.bias_offset + j] += g;
                kernels::axpy(g, layer_in, {gw + j * layer.in, layer.in});
                kernels::axpy(g, {w_data + j * layer.in, layer.in}, downstream);
            }
            upstream.swap(downstream);
        }
        if (num_classes_ > 0) {
            const auto width = static_cast<std::size_t>(config_.class_embedding);
            const std::size_t first = dim_ + static_cast<std::size_t>(config_.time_embedding);
            double* row = grad.data() + embedding_offset_ + static_cast<std::size_t>(cls) * width;
            for (std::size_t k = 0; k < width; ++k) row[k] += upstream[first + k];
        }
    }
    return total * inv_batch;
}

void TrainedDenoiser::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot write " + tmp.string());
        out.write(kMagic, sizeof(kMagic));
        write_pod(out, kFormatVersion);
        write_pod(out, schedule().fingerprint());
        write_pod(out, static_cast<std::uint32_t>(dim_));
        write_pod(out, static_cast<std::int32_t>(num_classes_));
        write_pod(out, static_cast<std::int32_t>(config_.hidden_width));
        write_pod(out, static_cast<std::int32_t>(config_.hidden_layers));
        write_pod(out, static_cast<std::int32_t>(config_.time_embedding));
        write_pod(out, static_cast<std::int32_t>(config_.class_embedding));
        write_pod(out, record_.seed);
        write_pod(out, static_cast<std::uint64_t>(record_.epoch_losses.size()));
        for (double v : record_.epoch_losses) write_pod(out, v);
        write_pod(out, static_cast<std::uint64_t>(params_.size()));
        out.write(reinterpret_cast<const char*>(params_.data()),
                  static_cast<std::streamsize>(params_.size() * sizeof(double)));
        if (!out) throw FormatError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

TrainedDenoiser TrainedDenoiser::load(const std::filesystem::path& path, std::shared_ptr<const NoiseSchedule> schedule) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("not a denoiser weight file");
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kFormatVersion) throw FormatError("unsupported denoiser format version " + std::to_string(version));
    const auto fingerprint = read_pod<std::uint64_t>(in);
    if (!schedule || fingerprint != schedule->fingerprint()) {
        throw FormatError("denoiser was trained with a different noise schedule");
    }
    const auto dim = read_pod<std::uint32_t>(in);
    DenoiserConfig config;
    const auto classes = read_pod<std::int32_t>(in);
    config.hidden_width = read_pod<std::int32_t>(in);
    config.hidden_layers = read_pod<std::int32_t>(in);
    config.time_embedding = read_pod<std::int32_t>(in);
    config.class_embedding = read_pod<std::int32_t>(in);
    config.seed = read_pod<std::uint64_t>(in);
    TrainedDenoiser model(std::move(schedule), dim, classes, config);
    const auto n_losses = read_pod<std::uint64_t>(in);
    model.record_.epoch_losses.resize(n_losses);
    for (double& v : model.record_.epoch_losses) v = read_pod<double>(in);
    const auto n_params = read_pod<std::uint64_t>(in);
    if (n_params != model.params_.size()) throw FormatError("parameter count does not match architecture");
    in.read(reinterpret_cast<char*>(model.params_.data()), static_cast<std::streamsize>(n_params * sizeof(double)));
    if (!in) throw FormatError("denoiser file truncated");
    return model;
}

TrainedDenoiser train_denoiser(const LabeledSamples& data, std::shared_ptr<const NoiseSchedule> schedule,
                               const DenoiserConfig& config) {
    if (data.empty()) throw ConfigError("denoiser training needs data");
    if (config.epochs < 0 || config.batch_size < 1) throw ConfigError("invalid epochs or batch size");
    if (!(config.condition_dropout >= 0.0 && config.condition_dropout <= 1.0)) {
        throw ConfigError("condition dropout must lie in [0, 1]");
    }
    int num_classes = 0;
    for (std::size_t i = 0; i < data.size(); ++i) num_classes = std::max(num_classes, data.label(i) + 1);

    const int T = schedule->max_step();
    TrainedDenoiser model(schedule, data.dim(), num_classes, config);
    Rng rng(derive_seed(config.seed, "denoiser/batches"));
    std::vector<double> grad(model.parameters().size());
    std::vector<double> m(grad.size(), 0.0);
    std::vector<double> v(grad.size(), 0.0);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<DenoisingExample> batch;
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    long step = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), std::mt19937_64(derive_seed(config.seed, "denoiser/epoch-" + std::to_string(epoch))));
        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) {
                const std::size_t idx = order[i];
                DenoisingExample ex{data.points[idx], rng.integer(1, T), rng.normal_vector(data.dim()), data.label(idx)};
                if (num_classes > 0 && rng.uniform() < config.condition_dropout) ex.label = kNoLabel;
                batch.push_back(std::move(ex));
            }
            const double loss = model.loss_and_gradient(batch, config.weighting, grad);
            if (!std::isfinite(loss)) {
                throw TrainingError("denoiser loss diverged at epoch " + std::to_string(epoch), epoch);
            }
            ++step;
            const kernels::AdamStep adam{config.learning_rate, kBeta1, kBeta2, 1e-8,
                                         1.0 - std::pow(kBeta1, static_cast<double>(step)),
                                         1.0 - std::pow(kBeta2, static_cast<double>(step))};
            kernels::adam_update(model.parameters(), grad, m, v, adam);
            epoch_loss += loss;
            ++batches;
        }
        model.record().epoch_losses.push_back(epoch_loss / batches);
    }
    return model;
}

double evaluate_denoiser_loss(const TrainedDenoiser& model, const LabeledSamples& data, LossWeighting weighting,
                              std::uint64_t seed, int draws_per_point) {
    if (data.empty()) throw ConfigError("evaluation needs data");
    Rng rng(seed);
    std::vector<DenoisingExample> examples;
    const int T = model.schedule().max_step();
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (int k = 0; k < draws_per_point; ++k) {
            const int label = model.is_conditional() ? data.label(i) : kNoLabel;
            examples.push_back({data.points[i], rng.integer(1, T), rng.normal_vector(data.dim()), label});
        }
    }
    return model.loss(examples, weighting);
}

}  // namespace ddpood
