#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qrp/features.hpp"
#include "qrp/gateway.hpp"
#include "qrp/inverted_index.hpp"
#include "qrp/patterns.hpp"

namespace qrp {

/// π(p | q, D_k(q)): one probability per pattern, summing to 1.
struct PatternDistribution {
    std::vector<double> probs;
};

/// Numerically stable softmax.
[[nodiscard]] PatternDistribution softmax(std::span<const double> logits);

/// Multinomial logistic regression over hashed features: logits = W·x + b,
/// with W stored row-major (num_classes × dim).
struct SelectorModel {
    FeatureConfig features;
    std::string library_version;
    std::size_t num_classes = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    std::string config_hash;

    [[nodiscard]] static SelectorModel zeros(std::size_t num_classes, const FeatureConfig& features,
                                             std::string library_version = {});

    [[nodiscard]] double weight(std::size_t cls, std::uint32_t feature) const {
        return weights[cls * features.dim + feature];
    }
    /// Throws std::invalid_argument if `x` was built for another dimension.
    [[nodiscard]] std::vector<double> logits(const FeatureVector& x) const;

    /// Throws DataError when the model was trained for a different library
    /// (pattern count or version).
    void check_compatible(const PatternLibrary& library) const;

    /// Binary container: magic, JSON header (feature config, library
    /// version, class count, config hash), then raw bias and weights.
    void save(const std::filesystem::path& path) const;
    [[nodiscard]] static SelectorModel load(const std::filesystem::path& path);
};

/// A featurized training example.
struct LabeledVector {
    FeatureVector x;
    int label = 0;
};

struct SelectorExample {
    std::string id;
    std::string query;
    RetrievalContext context;
    int label = 0;
};

struct SelectorHyper {
    int epochs = 20;
    std::size_t batch_size = 16;
    double eta0 = 0.1;
    double decay = 1e-3;   // η_t = η0 / (1 + t·decay), t = update count
    double lambda = 1e-5;  // L2 penalty on W (not on the bias)
    std::uint64_t seed = 0;
};

struct TrainedSelector {
    SelectorModel model;
    std::vector<double> epoch_loss;  // mean cross-entropy after each epoch
};

/// Mean cross-entropy −(1/N) Σ log π(y_i | x_i), without the penalty.
[[nodiscard]] double selector_data_loss(const SelectorModel& model, std::span<const LabeledVector> data);

/// Data loss + λ‖W‖².
[[nodiscard]] double selector_objective(const SelectorModel& model, std::span<const LabeledVector> data,
                                        double lambda);

/// Dense analytic gradient of selector_objective.
void selector_gradient(const SelectorModel& model, std::span<const LabeledVector> data, double lambda,
                       std::vector<double>& grad_weights, std::vector<double>& grad_bias);

/// Seeded mini-batch SGD on pre-featurized data, starting from zeros.
/// Throws DataError on an empty set or a label outside [0, num_classes).
[[nodiscard]] TrainedSelector train_linear_selector(std::span<const LabeledVector> data,
                                                    std::size_t num_classes,
                                                    const FeatureConfig& features,
                                                    const SelectorHyper& hyper);

/// Featurizes the examples and trains against `library`.
[[nodiscard]] TrainedSelector train_selector(std::span<const SelectorExample> examples,
                                             const PatternLibrary& library, const SelectorHyper& hyper = {},
                                             const FeatureConfig& features = {});

[[nodiscard]] PatternDistribution predict_distribution(const SelectorModel& model, std::string_view query,
                                                       const RetrievalContext& context);

enum class SelectionMode { argmax, sample };

/// Argmax (lowest id wins ties) or a seeded categorical draw.
[[nodiscard]] int select_pattern(const PatternDistribution& distribution,
                                 SelectionMode mode = SelectionMode::argmax, std::uint64_t seed = 0);

void write_loss_csv(std::span<const double> epoch_loss, const std::filesystem::path& path);

/// Common face of the trained and the prompted selector.
class PatternSelector {
public:
    virtual ~PatternSelector() = default;
    [[nodiscard]] virtual PatternDistribution distribution(std::string_view query,
                                                           const RetrievalContext& context) = 0;
};

class LinearSelector final : public PatternSelector {
public:
    explicit LinearSelector(SelectorModel model) : model_(std::move(model)) {}
    [[nodiscard]] PatternDistribution distribution(std::string_view query,
                                                   const RetrievalContext& context) override {
        return predict_distribution(model_, query, context);
    }
    [[nodiscard]] const SelectorModel& model() const noexcept { return model_; }

private:
    SelectorModel model_;
};

[[nodiscard]] ChatRequest build_selection_request(std::string_view query, const RetrievalContext& context,
                                                  const PatternLibrary& library);

/// Asks the LLM to pick a pattern name from the menu; the answer becomes a
/// one-hot distribution. An unknown name is re-asked once.
class LlmSelector final : public PatternSelector {
public:
    LlmSelector(PatternLibrary library, Gateway& llm) : library_(std::move(library)), llm_(llm) {}
    [[nodiscard]] PatternDistribution distribution(std::string_view query,
                                                   const RetrievalContext& context) override;

private:
    PatternLibrary library_;
    Gateway& llm_;
};

}  // namespace qrp
