#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "osca/annotation.hpp"
#include "osca/labels.hpp"

namespace osca {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class FeatureSource { precomputed_file, synthetic };

// T x D per-segment features. T >= 1 and all entries finite.
struct FeatureSequence {
    FeatureMatrix values;
    FeatureSource source = FeatureSource::synthetic;

    Eigen::Index steps() const noexcept { return values.rows(); }
    Eigen::Index dim() const noexcept { return values.cols(); }
};

struct ActivityVideo {
    std::string video_id;
    std::vector<Segment> segments;
    std::vector<FeatureSequence> features;  // one per segment
};

enum class Split { train, val, test };
std::string_view to_string(Split s) noexcept;
Split parse_split(std::string_view text);

struct Corpus {
    LabelVocabulary vocabulary;
    std::vector<ActivityVideo> videos;
    std::map<std::string, Split> split_assignment;  // empty until split()

    // Feature width shared by all segments, 0 for a corpus without features.
    Eigen::Index feature_dim() const noexcept;
    std::vector<const ActivityVideo*> videos_in(Split split) const;
    std::size_t num_segments() const noexcept;
};

// Checks every corpus invariant; throws ValidationError listing all problems.
void validate_corpus(const Corpus& corpus);

// ---------------------------------------------------------------------------
// Files
//
// <name>.jsonl holds one JSON object per line:
//   {"kind":"vocab","verbs":[..],"nouns":[..],"feature_file":"<name>.features.bin"}
//   {"kind":"video","video_id":..,"split":"train"?,"segments":[{segment_id,start,end,pnr,
//      verb,noun,state_change,pre_frame:{idx,box:[x,y,w,h],occluded},post_frame:{..}}]}
//   {"kind":"features","video_id":..,"segment_id":..,"offset":<bytes>,"T":..,"D":..}
// The sidecar holds the T*D float32 little-endian values of each segment in
// row-major order starting at the byte offset given by its index record.
// ---------------------------------------------------------------------------

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Decision samples
// ---------------------------------------------------------------------------

struct DecisionSample {
    std::string video_id;
    int decision_index = 0;  // n: segments 1..n observed, target is segment n+1
    FeatureMatrix visual_window;
    std::vector<ActionLabel> action_history;
    std::vector<StateChange> state_history;
    StateChange target = StateChange::no_osc;
};

struct SampleOptions {
    int window = 1;                          // W observed segments in the visual window
    std::optional<int> max_history;          // keep-most-recent truncation
};

std::vector<DecisionSample> build_decision_samples(const ActivityVideo& video,
                                                   const SampleOptions& options = {});
std::vector<DecisionSample> build_decision_samples(const Corpus& corpus, std::optional<Split> split,
                                                   const SampleOptions& options = {});

// ---------------------------------------------------------------------------
// Splitting and priors
// ---------------------------------------------------------------------------

// Video-level assignment; counts follow largest remainders so every split is
// within one video of its exact share.
Corpus split(Corpus corpus, std::array<double, 3> ratios, std::uint64_t seed);

// Empirical distribution of decision-sample targets (segments 2..n of each
// video) over the given split, or the whole corpus.
std::array<double, kNumStateClasses> class_priors(const Corpus& corpus, std::optional<Split> split);

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

using ClassVector = std::array<double, kNumStateClasses>;
using ClassMatrix = std::array<ClassVector, kNumStateClasses>;

struct SynthConfig {
    int num_videos = 100;
    int min_segments = 6;
    int max_segments = 14;
    ClassVector class_priors{};
    ClassMatrix transition_matrix{};
    int verbs_per_state = 3;
    int nouns_per_state = 4;
    int feature_dim = 256;
    int feature_steps = 8;
    double feature_informativeness = 0.3;
    // Probability that a segment's (verb, noun) comes from its state's own
    // sub-vocabulary; otherwise it is uniform over the whole vocabulary.
    double action_informativeness = 1.0;
    double occlusion_rate = 0.0;
    double small_box_rate = 0.0;
    std::uint64_t seed = 0;

    // Violations, empty when valid.
    std::vector<std::string> validate() const;
};

// Per-class train counts of the real dataset, canonical class order.
inline constexpr std::array<double, kNumStateClasses> kReferenceTrainCounts = {
    4017, 1492, 14984, 15338, 4186, 1773, 4400, 15667, 2066};

ClassVector reference_class_priors();
// Each class moves to a fixed successor with probability `peak`; the rest of
// the row follows `background`.
ClassMatrix state_predictive_transitions(double peak, const ClassVector& background);
ClassMatrix uniform_transitions();

SynthConfig default_synth_config();

Corpus generate_synthetic(const SynthConfig& cfg);

}  // namespace osca
