#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osca/corpus.hpp"
#include "osca/labels.hpp"

namespace osca {

// ---------------------------------------------------------------------------
// Flat parameter storage
// ---------------------------------------------------------------------------

struct TensorSlot {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Eigen::Index offset = 0;  // into the flat vector

    Eigen::Index size() const noexcept { return rows * cols; }
};

// All trainable tensors of a model live in one contiguous vector so the
// optimizer, gradient buffers and checkpoints work on a single layout.
class ParameterSet {
public:
    using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
    using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;

    int add(std::string name, Eigen::Index rows, Eigen::Index cols);
    void finalize() { values_.setZero(total_); }

    Eigen::Index size() const noexcept { return total_; }
    const std::vector<TensorSlot>& slots() const noexcept { return slots_; }
    const TensorSlot& slot(int id) const { return slots_[static_cast<std::size_t>(id)]; }
    std::optional<int> find(std::string_view name) const;

    Eigen::VectorXd& values() noexcept { return values_; }
    const Eigen::VectorXd& values() const noexcept { return values_; }

    MatrixMap view(int id) { return view(id, values_); }
    ConstMatrixMap view(int id) const { return view(id, values_); }
    MatrixMap view(int id, Eigen::VectorXd& buffer) const;
    ConstMatrixMap view(int id, const Eigen::VectorXd& buffer) const;

private:
    std::vector<TensorSlot> slots_;
    Eigen::VectorXd values_;
    Eigen::Index total_ = 0;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct EncoderConfig {
    int hidden_size = 128;
    std::vector<int> mlp_sizes{128};
    int embedding_dim = 64;  // lexical streams only

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct StreamSet {
    bool visual = true;
    bool action = true;
    bool state = true;

    bool any() const noexcept { return visual || action || state; }
    std::string to_string() const;  // "vid,action,state" subset
    static StreamSet parse(std::string_view text);
    friend bool operator==(const StreamSet&, const StreamSet&) = default;
};

// The four model variants compared in the ablation.
inline constexpr StreamSet kVisionOnly{true, false, false};
inline constexpr StreamSet kVisionAction{true, true, false};
inline constexpr StreamSet kVisionState{true, false, true};
inline constexpr StreamSet kAllStreams{true, true, true};

struct ModelConfig {
    EncoderConfig visual;
    EncoderConfig action;
    EncoderConfig state;
    std::vector<int> fusion_sizes{256, kNumStateClasses};  // last entry is the class count
    StreamSet streams;
    int feature_dim = 256;
    int num_verbs = 0;
    int num_nouns = 0;

    // Violations, empty when valid.
    std::vector<std::string> validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
    int batch_size = 32;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int epochs = 30;
    std::uint64_t seed = 0;

    std::vector<std::string> validate() const;
};

// ---------------------------------------------------------------------------
// Predictions and loss
// ---------------------------------------------------------------------------

struct PredictionDistribution {
    std::array<double, kNumStateClasses> probs{};

    StateChange argmax() const noexcept;
    // Classes ordered by descending probability, ties by ascending class index.
    std::array<int, kNumStateClasses> ranking() const noexcept;
};

inline constexpr double kProbabilityFloor = 1e-12;

// Mean categorical cross-entropy with one-hot targets.
double loss(std::span<const PredictionDistribution> predictions, std::span<const StateChange> targets);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

// Action and state histories fed to the lexical streams.
struct Histories {
    std::vector<ActionLabel> actions;
    std::vector<StateChange> states;
};

class AnticipationModel {
public:
    AnticipationModel(ModelConfig config, std::uint64_t vocabulary_fingerprint, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return config_; }
    std::uint64_t vocabulary_fingerprint() const noexcept { return fingerprint_; }
    std::uint64_t seed() const noexcept { return seed_; }
    ParameterSet& parameters() noexcept { return params_; }
    const ParameterSet& parameters() const noexcept { return params_; }

    // Width of each stream embedding (0 for a disabled stream).
    Eigen::Index visual_width() const noexcept;
    Eigen::Index action_width() const noexcept;
    Eigen::Index state_width() const noexcept;

    Eigen::VectorXd encode_visual(const FeatureMatrix& window) const;
    // strict: out-of-vocabulary tokens throw; otherwise they map to the
    // reserved UNK row.
    Eigen::VectorXd encode_action_history(std::span<const ActionLabel> history, bool strict = true) const;
    Eigen::VectorXd encode_state_history(std::span<const StateChange> history) const;

    // Pass exactly the embeddings of the enabled streams.
    PredictionDistribution fuse_predict(const Eigen::VectorXd* visual, const Eigen::VectorXd* action,
                                        const Eigen::VectorXd* state) const;

    // Oracle histories from the sample unless `recognized` is given.
    PredictionDistribution predict(const DecisionSample& sample, const Histories* recognized = nullptr) const;

    // Loss of one sample; adds d loss / d params into `grad` (same layout as
    // parameters().values()).
    double accumulate_gradient(const DecisionSample& sample, Eigen::VectorXd& grad) const;

    // Slots belonging to the fusion head, in layer order.
    std::vector<int> fusion_slots() const;

private:
    struct Lstm {
        int wx, wh, b;
        Eigen::Index hidden;
    };
    struct Dense {
        int w, b;
    };
    struct Encoder {
        std::vector<int> embeddings;  // verb+noun, or state, or none
        Lstm forward;
        Lstm backward;
        std::vector<Dense> mlp;
        Eigen::Index output_width = 0;
    };
    struct EncoderTrace;
    struct InitSpec;

    Encoder build_encoder(const std::string& prefix, const EncoderConfig& cfg, Eigen::Index input_width,
                          std::vector<std::pair<Eigen::Index, Eigen::Index>> embedding_shapes,
                          std::vector<InitSpec>& inits);

    Eigen::MatrixXd action_inputs(std::span<const ActionLabel> history, bool strict,
                                  std::vector<std::array<int, 2>>* tokens) const;
    Eigen::MatrixXd state_inputs(std::span<const StateChange> history, std::vector<std::array<int, 2>>* tokens) const;

    Eigen::VectorXd run_encoder(const Encoder& enc, const Eigen::MatrixXd& inputs, EncoderTrace* trace) const;
    void backprop_encoder(const Encoder& enc, const EncoderTrace& trace, const Eigen::VectorXd& d_out,
                          const std::vector<std::array<int, 2>>& tokens, Eigen::VectorXd& grad) const;

    ModelConfig config_;
    std::uint64_t fingerprint_;
    std::uint64_t seed_;
    ParameterSet params_;
    std::optional<Encoder> visual_;
    std::optional<Encoder> action_;
    std::optional<Encoder> state_;
    std::vector<Dense> fusion_;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpochRecord {
    int epoch = 0;  // 0 = before the first update
    double train_loss = 0;
    double val_loss = 0;
    double val_top1 = 0;
    double val_top5 = 0;
    double val_f1 = 0;
};

struct TrainResult {
    AnticipationModel model;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam on the mean cross-entropy. Returns the parameters with the
// lowest validation loss (earliest epoch on ties; epoch 0 included). With an
// empty validation set the final parameters are returned.
TrainResult train(std::span<const DecisionSample> train_samples, std::span<const DecisionSample> val_samples,
                  const ModelConfig& model_cfg, const TrainConfig& train_cfg, std::uint64_t vocabulary_fingerprint,
                  const EpochCallback& on_epoch = {});

// Model config matching a corpus's vocabulary and feature width.
ModelConfig model_config_for(const Corpus& corpus, StreamSet streams);

std::vector<PredictionDistribution> predict_all(const AnticipationModel& model,
                                                std::span<const DecisionSample> samples,
                                                std::span<const Histories> recognized = {});

// ---------------------------------------------------------------------------
// Checkpoints
//
//   bytes 0..7   "OSCACKPT"
//   u32 LE       format version
//   u32 LE       header length L
//   L bytes      JSON header: format_version, model_config, vocabulary_fingerprint
//                (hex), seed, tensors [{name, rows, cols, offset}]
//   data         float32 LE, each tensor row-major at header offset (bytes,
//                relative to the start of the data section)
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const AnticipationModel& model, const std::filesystem::path& path);
AnticipationModel load_checkpoint(const std::filesystem::path& path);

void write_history_csv(std::span<const EpochRecord> history, const std::filesystem::path& path);

}  // namespace osca
