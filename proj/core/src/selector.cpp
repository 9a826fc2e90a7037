#include "qrp/selector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "qrp/error.hpp"
#include "qrp/induction.hpp"

namespace qrp {

using nlohmann::json;

PatternDistribution softmax(std::span<const double> logits) {
    PatternDistribution dist;
    if (logits.empty()) return dist;
    const double top = *std::max_element(logits.begin(), logits.end());
    dist.probs.resize(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        dist.probs[i] = std::exp(logits[i] - top);
        total += dist.probs[i];
    }
    for (auto& p : dist.probs) p /= total;
    return dist;
}

SelectorModel SelectorModel::zeros(std::size_t num_classes, const FeatureConfig& features,
                                   std::string library_version) {
    SelectorModel model;
    model.features = features;
    model.num_classes = num_classes;
    model.library_version = std::move(library_version);
    model.weights.assign(num_classes * features.dim, 0.0);
    model.bias.assign(num_classes, 0.0);
    return model;
}

std::vector<double> SelectorModel::logits(const FeatureVector& x) const {
    if (x.dim != features.dim) {
        throw std::invalid_argument(
            fmt::format("feature vector has dimension {}, model expects {}", x.dim, features.dim));
    }
    std::vector<double> out(bias);
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double* row = weights.data() + c * features.dim;
        double z = 0.0;
        for (std::size_t k = 0; k < x.indices.size(); ++k) {
            if (x.indices[k] >= features.dim) throw std::invalid_argument("feature index out of range");
            z += row[x.indices[k]] * x.values[k];
        }
        out[c] += z;
    }
    return out;
}

void SelectorModel::check_compatible(const PatternLibrary& library) const {
    if (library.size() != num_classes) {
        throw DataError(fmt::format("selector has {} classes but the library has {} patterns",
                                    num_classes, library.size()));
    }
    if (!library_version.empty() && !library.version.empty() && library_version != library.version) {
        throw DataError(fmt::format("selector was trained for library {} but {} is loaded",
                                    library_version, library.version));
    }
}

namespace {

constexpr char kModelMagic[8] = {'Q', 'R', 'P', 'S', 'E', 'L', '0', '1'};

}  // namespace

void SelectorModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write selector model " + path.string());
    const json header = {{"format", "qrp-selector"},
                         {"format_version", 1},
                         {"feature_config", to_json(features)},
                         {"library_version", library_version},
                         {"num_classes", num_classes},
                         {"config_hash", config_hash}};
    const auto text = header.dump();
    const std::uint64_t len = text.size();
    out.write(kModelMagic, sizeof kModelMagic);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(bias.data()),
              static_cast<std::streamsize>(bias.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(weights.data()),
              static_cast<std::streamsize>(weights.size() * sizeof(double)));
    if (!out) throw DataError("failed writing selector model " + path.string());
}

SelectorModel SelectorModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open selector model " + path.string());
    char magic[sizeof kModelMagic] = {};
    std::uint64_t len = 0;
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, sizeof magic) != 0 ||
        !in.read(reinterpret_cast<char*>(&len), sizeof len) || len > (1u << 20)) {
        throw DataError(path.string() + " is not a qrp selector model");
    }
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    SelectorModel model;
    try {
        const auto header = json::parse(text);
        model.features = feature_config_from_json(header.at("feature_config"));
        model.library_version = header.at("library_version").get<std::string>();
        model.num_classes = header.at("num_classes").get<std::size_t>();
        model.config_hash = header.value("config_hash", std::string{});
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": bad selector header: " + e.what());
    }
    model.bias.resize(model.num_classes);
    model.weights.resize(model.num_classes * model.features.dim);
    in.read(reinterpret_cast<char*>(model.bias.data()),
            static_cast<std::streamsize>(model.bias.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(model.weights.data()),
            static_cast<std::streamsize>(model.weights.size() * sizeof(double)));
    if (!in) throw DataError("truncated selector model " + path.string());
    return model;
}

double selector_data_loss(const SelectorModel& model, std::span<const LabeledVector> data) {
    if (data.empty()) return 0.0;
    double total = 0.0;
    for (const auto& ex : data) {
        const auto z = model.logits(ex.x);
        const double top = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - top);
        total += (top + std::log(sum)) - z[static_cast<std::size_t>(ex.label)];
    }
    return total / static_cast<double>(data.size());
}

double selector_objective(const SelectorModel& model, std::span<const LabeledVector> data,
                          double lambda) {
    double sq = 0.0;
    for (double w : model.weights) sq += w * w;
    return selector_data_loss(model, data) + lambda * sq;
}

void selector_gradient(const SelectorModel& model, std::span<const LabeledVector> data, double lambda,
                       std::vector<double>& grad_weights, std::vector<double>& grad_bias) {
    grad_weights.assign(model.weights.size(), 0.0);
    grad_bias.assign(model.num_classes, 0.0);
    const double inv_n = data.empty() ? 0.0 : 1.0 / static_cast<double>(data.size());
    for (const auto& ex : data) {
        const auto p = softmax(model.logits(ex.x)).probs;
        for (std::size_t c = 0; c < model.num_classes; ++c) {
            const double r = (p[c] - (static_cast<int>(c) == ex.label ? 1.0 : 0.0)) * inv_n;
            grad_bias[c] += r;
            double* row = grad_weights.data() + c * model.features.dim;
            for (std::size_t k = 0; k < ex.x.indices.size(); ++k) row[ex.x.indices[k]] += r * ex.x.values[k];
        }
    }
    for (std::size_t i = 0; i < model.weights.size(); ++i) grad_weights[i] += 2.0 * lambda * model.weights[i];
}

TrainedSelector train_linear_selector(std::span<const LabeledVector> data, std::size_t num_classes,
                                      const FeatureConfig& features, const SelectorHyper& hyper) {
    if (data.empty()) throw DataError("selector training set is empty");
    if (num_classes == 0) throw DataError("selector needs at least one class");
    if (hyper.batch_size == 0) throw ConfigError("batch_size must be >= 1");
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int y = data[i].label;
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw DataError(fmt::format("training example {} has label {} outside [0, {})", i, y, num_classes));
        }
        if (data[i].x.dim != features.dim) {
            throw DataError(fmt::format("training example {} has feature dimension {}, expected {}", i,
                                        data[i].x.dim, features.dim));
        }
    }

    TrainedSelector out{SelectorModel::zeros(num_classes, features), {}};
    auto& model = out.model;
    const std::size_t dim = features.dim;
    // W = scale · V, so the L2 shrink is O(1) per step and updates stay sparse.
    std::vector<double> v(model.weights.size(), 0.0);
    double scale = 1.0;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(hyper.seed);
    std::size_t step = 0;
    std::vector<double> probs(num_classes);
    std::vector<std::vector<double>> batch_probs;

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += hyper.batch_size, ++step) {
            const std::size_t end = std::min(order.size(), start + hyper.batch_size);
            const double eta = hyper.eta0 / (1.0 + static_cast<double>(step) * hyper.decay);
            const double inv_b = 1.0 / static_cast<double>(end - start);

            batch_probs.clear();
            for (std::size_t i = start; i < end; ++i) {
                const auto& ex = data[order[i]];
                std::vector<double> z(model.bias);
                for (std::size_t c = 0; c < num_classes; ++c) {
                    const double* row = v.data() + c * dim;
                    double acc = 0.0;
                    for (std::size_t k = 0; k < ex.x.indices.size(); ++k) acc += row[ex.x.indices[k]] * ex.x.values[k];
                    z[c] += scale * acc;
                }
                batch_probs.push_back(softmax(z).probs);
            }

            const double shrink = 1.0 - 2.0 * eta * hyper.lambda;
            scale *= shrink;
            for (std::size_t i = start; i < end; ++i) {
                const auto& ex = data[order[i]];
                const auto& p = batch_probs[i - start];
                for (std::size_t c = 0; c < num_classes; ++c) {
                    const double r = (p[c] - (static_cast<int>(c) == ex.label ? 1.0 : 0.0)) * inv_b;
                    model.bias[c] -= eta * r;
                    double* row = v.data() + c * dim;
                    const double step_v = eta * r / scale;
                    for (std::size_t k = 0; k < ex.x.indices.size(); ++k) row[ex.x.indices[k]] -= step_v * ex.x.values[k];
                }
            }
            if (scale < 1e-6) {
                for (auto& w : v) w *= scale;
                scale = 1.0;
            }
        }
        for (std::size_t i = 0; i < v.size(); ++i) model.weights[i] = scale * v[i];
        out.epoch_loss.push_back(selector_data_loss(model, data));
    }
    for (std::size_t i = 0; i < v.size(); ++i) model.weights[i] = scale * v[i];
    return out;
}

TrainedSelector train_selector(std::span<const SelectorExample> examples, const PatternLibrary& library,
                               const SelectorHyper& hyper, const FeatureConfig& features) {
    if (examples.empty()) throw DataError("selector training set is empty");
    std::vector<LabeledVector> data;
    data.reserve(examples.size());
    for (const auto& ex : examples) {
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= library.size()) {
            throw DataError(fmt::format("example '{}' has label {} outside [0, {})", ex.id, ex.label,
                                        library.size()));
        }
        data.push_back({featurize(ex.query, ex.context, features), ex.label});
    }
    auto trained = train_linear_selector(data, library.size(), features, hyper);
    trained.model.library_version = library.version;
    return trained;
}

PatternDistribution predict_distribution(const SelectorModel& model, std::string_view query,
                                         const RetrievalContext& context) {
    return softmax(model.logits(featurize(query, context, model.features)));
}

int select_pattern(const PatternDistribution& distribution, SelectionMode mode, std::uint64_t seed) {
    const auto& p = distribution.probs;
    if (p.empty()) throw std::invalid_argument("empty pattern distribution");
    if (mode == SelectionMode::argmax) {
        return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    }
    std::mt19937_64 rng(seed);
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        cumulative += p[i];
        if (u < cumulative) return static_cast<int>(i);
    }
    // Rounding left u above the final cumulative sum: last positive entry.
    for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] > 0.0) return static_cast<int>(i);
    }
    return 0;
}

void write_loss_csv(std::span<const double> epoch_loss, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write loss curve " + path.string());
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) out << fmt::format("{},{:.9f}\n", i + 1, epoch_loss[i]);
}

ChatRequest build_selection_request(std::string_view query, const RetrievalContext& context,
                                    const PatternLibrary& library) {
    std::string user = "Patterns:\n";
    for (const auto& p : library.patterns) user += fmt::format("- {}: {}\n", p.name, p.description);
    user += fmt::format("\nQuery: {}\n", query);
    if (!context.entries.empty()) {
        user += "\nTop retrieved passages:\n";
        for (std::size_t i = 0; i < context.entries.size(); ++i) {
            user += fmt::format("[{}] {}\n", i + 1, context.entries[i].snippet);
        }
    }
    user += "\nWhich single pattern should be applied to reformulate this query? Answer with the pattern name only.";
    ChatRequest request;
    request.messages = {
        {Role::system,
         "You choose how to reformulate search queries. Given a query, the passages it currently "
         "retrieves and a list of reformulation patterns, answer with the name of the one pattern "
         "that would most improve retrieval. Output only the pattern name."},
        {Role::user, std::move(user)}};
    return request;
}

PatternDistribution LlmSelector::distribution(std::string_view query, const RetrievalContext& context) {
    auto request = build_selection_request(query, context, library_);
    std::string last;
    for (int attempt = 0; attempt < 2; ++attempt) {
        last = llm_.complete(request).content;
        if (const auto id = resolve_pattern_name(last, library_)) {
            PatternDistribution dist;
            dist.probs.assign(library_.size(), 0.0);
            dist.probs[static_cast<std::size_t>(*id)] = 1.0;
            return dist;
        }
        if (attempt == 0) {
            request.messages.back().content += fmt::format(
                "\n\nAnswer with exactly one of: {}.", fmt::join(library_.names(), ", "));
        }
    }
    throw ModelOutputError(fmt::format("selector reply is not a pattern name; valid names: {}",
                                       fmt::join(library_.names(), ", ")),
                           last);
}

}  // namespace qrp
