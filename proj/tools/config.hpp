#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "osca/annotation.hpp"
#include "osca/corpus.hpp"
#include "osca/eval.hpp"
#include "osca/model.hpp"
#include "osca/recognizers.hpp"

namespace osca::cli {

// Flat "key = value" text; '#' starts a comment. Later assignments win.
using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(const std::filesystem::path& path);
KeyValues parse_key_values(const std::string& text, const std::string& source);

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out = "osca_out";
    std::optional<std::filesystem::path> corpus;
    std::optional<std::filesystem::path> checkpoint;

    SynthConfig synth;
    double transition_peak = 0.6;
    std::string transitions = "predictive";  // predictive | uniform

    double area_threshold = kDefaultAreaThreshold;

    std::array<double, 3> split_ratios{0.6, 0.2, 0.2};

    ModelConfig model;
    TrainConfig train;
    SampleOptions samples;

    RecognizerSpec recognizer = OracleRecognizer{};
    std::string noise;  // "a,s": noisy recognizer seeded with `seed`
    std::string eval_split = "test";  // train | val | test | all
    std::vector<NoiseLevel> noise_levels = kReferenceNoiseLevels;
    std::vector<std::uint64_t> sweep_seeds{1, 2, 3};
    bool plots = true;
};

// Defaults, overridden by `values`. Throws ConfigError listing every bad or
// unknown key and every violated invariant.
ExperimentConfig build_config(const KeyValues& values);

// Every key, fully resolved, in a stable order.
std::string render_config(const ExperimentConfig& cfg);

}  // namespace osca::cli
