#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "osca/corpus.hpp"
#include "osca/labels.hpp"
#include "osca/model.hpp"
#include "osca/random.hpp"

namespace osca {

struct NoiseSpec {
    double action_rate = 0;
    double state_rate = 0;
    std::uint64_t seed = 0;
};

struct FramePrediction {
    FrameStateLabel label;
    std::optional<double> confidence;
};

Histories oracle_histories(const DecisionSample& sample);

// Each token is, with probability p, replaced by a uniform draw from the
// other V - 1 labels. Tokens must lie in [0, V).
std::vector<int> corrupt_history(std::span<const int> tokens, double p, int vocab_size, Rng& rng);

std::vector<StateChange> corrupt_states(std::span<const StateChange> states, double p, Rng& rng);
// Replaces whole (verb, noun) pairs with a different pair of the flattened
// verb x noun space.
std::vector<ActionLabel> corrupt_actions(std::span<const ActionLabel> actions, double p,
                                         const LabelVocabulary& vocab, Rng& rng);

// Two-frame rule: pre_X/post_X -> X; pre_X/post_inverse(X) -> no_osc;
// otherwise the base of the second prediction, whatever its phase.
StateChange compose_state_change(FrameStateLabel pre_pred, FrameStateLabel post_pred) noexcept;

// ---------------------------------------------------------------------------
// Recognizer specs
// ---------------------------------------------------------------------------

struct OracleRecognizer {};
struct NoisyRecognizer {
    NoiseSpec noise;
};
// Simulated pre/post frame classifiers that emit the correct label with the
// given probability and a uniform wrong label otherwise.
struct ComposedRecognizer {
    double accuracy_pre = 1.0;
    double accuracy_post = 1.0;
    std::uint64_t seed = 0;
};

using RecognizerSpec = std::variant<OracleRecognizer, NoisyRecognizer, ComposedRecognizer>;

// "oracle" | "noisy(a, s, seed)" | "composed(acc_pre, acc_post, seed)".
RecognizerSpec parse_recognizer(std::string_view text);
std::string to_string(const RecognizerSpec& spec);

// Frame labels a perfect classifier would emit for a segment. No-change
// segments show one state at both ends, rendered as pre_X / post_inverse(X)
// for a pair X drawn from `rng`.
std::pair<FrameStateLabel, FrameStateLabel> true_frame_labels(const Segment& segment, Rng& rng);

// Recognizer output for every segment of a video; the history at decision n
// is the first n entries. Outputs depend only on (spec, video id, segment),
// never on the decision point.
struct RecognizedVideo {
    std::vector<ActionLabel> actions;
    std::vector<StateChange> states;

    Histories at(int decision_index, std::optional<int> max_history = std::nullopt) const;
};

// `frame_predictions`, when given for a composed spec, replaces the simulated
// classifiers (one pre/post pair per segment).
RecognizedVideo recognized_histories(
    const ActivityVideo& video, const RecognizerSpec& spec, const LabelVocabulary& vocab,
    std::span<const std::pair<FramePrediction, FramePrediction>> frame_predictions = {});

// Histories aligned with build_decision_samples(corpus, split, options).
std::vector<Histories> recognized_sample_histories(const Corpus& corpus, std::optional<Split> split,
                                                   const RecognizerSpec& spec, const SampleOptions& options = {});

}  // namespace osca
