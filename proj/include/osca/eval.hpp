#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osca/corpus.hpp"
#include "osca/labels.hpp"
#include "osca/model.hpp"

namespace osca {

using ConfusionMatrix = std::array<std::array<long, kNumStateClasses>, kNumStateClasses>;

// Row = target, column = argmax prediction.
ConfusionMatrix confusion(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets);

// Class-mean top-k hit rate over the classes present in `targets`, in percent.
double topk_mean_accuracy(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets, int k);

// Mean F1 over classes present in targets or argmax predictions, in percent.
double macro_f1(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets);

// Plain fraction of correct argmax predictions, in percent. Reported for
// comparison only; the headline accuracy is the class mean.
double micro_accuracy(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets);

struct ClassMetrics {
    long support = 0;     // target count
    long predicted = 0;   // argmax count
    double recall = 0;    // percent
    double precision = 0; // percent
    double f1 = 0;        // percent
    bool present = false; // class occurs in targets
};

struct MetricsReport {
    double top1_macc = 0;
    double top5_macc = 0;
    double macro_f1 = 0;
    double micro_top1 = 0;
    std::array<ClassMetrics, kNumStateClasses> per_class{};
    std::vector<StateChange> absent_classes;  // excluded from the accuracy means
    long n_samples = 0;
};

MetricsReport evaluate(std::span<const PredictionDistribution> preds, std::span<const StateChange> targets);

std::string metrics_to_json(const MetricsReport& report);

// ---------------------------------------------------------------------------
// Corpus statistics
// ---------------------------------------------------------------------------

struct TransitionMatrix {
    std::array<std::array<long, kNumStateClasses>, kNumStateClasses> counts{};
    std::array<std::array<double, kNumStateClasses>, kNumStateClasses> normalized{};
    std::array<bool, kNumStateClasses> empty_row{};  // rows with no outgoing transition

    long total() const noexcept;
};

// Consecutive state-change pairs inside each video of the split (or corpus).
TransitionMatrix transition_matrix(const Corpus& corpus, std::optional<Split> split);

struct LabelStateRow {
    int label = 0;  // verb or noun index
    std::array<long, kNumStateClasses> counts{};
    long total = 0;
    int distinct_states = 0;
};

struct StateHistograms {
    // Rows in descending total frequency, ties by vocabulary index; labels
    // that never occur are omitted.
    std::vector<LabelStateRow> verb_by_state;
    std::vector<LabelStateRow> noun_by_state;
    // states_per_verb[k] = number of verbs seen with exactly k distinct states.
    std::array<long, kNumStateClasses + 1> states_per_verb{};
    std::array<long, kNumStateClasses + 1> states_per_noun{};
    std::array<long, kNumStateClasses> segments_per_state{};
};

StateHistograms state_histograms(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Noise sweep
// ---------------------------------------------------------------------------

struct NoiseLevel {
    double action_rate = 0;
    double state_rate = 0;
};

inline const std::vector<NoiseLevel> kReferenceNoiseLevels = {
    {0.0, 0.0}, {0.25, 0.25}, {0.5, 0.5}, {0.75, 0.75}};

struct SweepRow {
    NoiseLevel level;
    std::vector<MetricsReport> per_seed;
    double top1_mean = 0, top1_std = 0;
    double top5_mean = 0, top5_std = 0;
    double f1_mean = 0, f1_std = 0;
};

// Evaluates the model on every decision sample of the given videos with
// histories from a noisy recognizer, per level and seed. The (0, 0) level
// routes through the same noisy recognizer, which is then an identity.
std::vector<SweepRow> noise_sweep(const Corpus& corpus, std::optional<Split> split, const AnticipationModel& model,
                                  std::span<const NoiseLevel> levels, std::span<const std::uint64_t> seeds,
                                  const SampleOptions& options = {});

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);

}  // namespace osca
