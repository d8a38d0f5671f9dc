#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <sstream>

#include "commands.hpp"
#include "osca/annotation.hpp"
#include "osca/corpus.hpp"
#include "osca/errors.hpp"
#include "osca/eval.hpp"
#include "osca/model.hpp"
#include "osca/recognizers.hpp"

namespace py = pybind11;
using namespace osca;

namespace {

using ProbArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

std::vector<PredictionDistribution> to_predictions(const ProbArray& probs) {
    if (probs.ndim() != 2 || probs.shape(1) != kNumStateClasses) {
        throw ShapeError("probabilities must have shape (N, 9)");
    }
    auto p = probs.unchecked<2>();
    std::vector<PredictionDistribution> out(static_cast<std::size_t>(p.shape(0)));
    for (py::ssize_t i = 0; i < p.shape(0); ++i) {
        for (int k = 0; k < kNumStateClasses; ++k) out[static_cast<std::size_t>(i)].probs[static_cast<std::size_t>(k)] = p(i, k);
    }
    return out;
}

std::vector<StateChange> to_targets(const IntArray& targets) {
    if (targets.ndim() != 1) throw ShapeError("targets must be one-dimensional");
    std::vector<StateChange> out;
    auto t = targets.unchecked<1>();
    for (py::ssize_t i = 0; i < t.shape(0); ++i) out.push_back(state_change_from_index(t(i)));
    return out;
}

template <class Grid>
py::array_t<double> grid_array(const Grid& g) {
    py::array_t<double> out({kNumStateClasses, kNumStateClasses});
    auto o = out.mutable_unchecked<2>();
    for (int r = 0; r < kNumStateClasses; ++r) {
        for (int c = 0; c < kNumStateClasses; ++c) o(r, c) = static_cast<double>(g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    }
    return out;
}

py::dict metrics_dict(const MetricsReport& r) {
    py::dict d;
    d["n_samples"] = r.n_samples;
    d["top1_macc"] = r.top1_macc;
    d["top5_macc"] = r.top5_macc;
    d["macro_f1"] = r.macro_f1;
    d["micro_top1"] = r.micro_top1;
    py::list absent;
    for (StateChange s : r.absent_classes) absent.append(std::string(to_string(s)));
    d["absent_classes"] = absent;
    return d;
}

std::optional<Split> split_arg(const std::string& name) {
    if (name == "all") return std::nullopt;
    return parse_split(name);
}

}  // namespace

PYBIND11_MODULE(_osca, m) {
    m.doc() = "Object state change anticipation: labels, metrics, corpora and checkpoints";

    auto base = py::register_exception<Error>(m, "OscaError", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<TrainingError>(m, "TrainingError", base.ptr());

    m.def("state_classes", [] {
        std::vector<std::string> out;
        for (int k = 0; k < kNumStateClasses; ++k) out.emplace_back(to_string(static_cast<StateChange>(k)));
        return out;
    });
    m.def("frame_labels", [] {
        std::vector<std::string> out;
        for (const auto& l : all_frame_labels()) out.push_back(to_string(l));
        return out;
    });
    m.def(
        "inverse_of",
        [](const std::string& s) -> std::optional<std::string> {
            if (auto inv = inverse_of(parse_state_change(s))) return std::string(to_string(*inv));
            return std::nullopt;
        },
        py::arg("state_change"));
    m.def(
        "compose",
        [](const std::string& pre, const std::string& post) {
            return std::string(to_string(compose_state_change(parse_frame_label(pre), parse_frame_label(post))));
        },
        py::arg("first"), py::arg("second"), "state change from the labels of the two critical frames");

    m.def(
        "evaluate",
        [](const ProbArray& probs, const IntArray& targets) {
            return metrics_dict(evaluate(to_predictions(probs), to_targets(targets)));
        },
        py::arg("probs"), py::arg("targets"));
    m.def(
        "topk_mean_accuracy",
        [](const ProbArray& probs, const IntArray& targets, int k) {
            return topk_mean_accuracy(to_predictions(probs), to_targets(targets), k);
        },
        py::arg("probs"), py::arg("targets"), py::arg("k"));
    m.def(
        "confusion",
        [](const ProbArray& probs, const IntArray& targets) {
            return grid_array(confusion(to_predictions(probs), to_targets(targets)));
        },
        py::arg("probs"), py::arg("targets"));

    m.def(
        "corrupt_history",
        [](std::vector<int> tokens, double p, int vocab_size, std::uint64_t seed) {
            Rng rng = derive_rng(seed, 0);
            return corrupt_history(tokens, p, vocab_size, rng);
        },
        py::arg("tokens"), py::arg("p"), py::arg("vocab_size"), py::arg("seed") = 0);

    m.def(
        "corpus_stats",
        [](const std::filesystem::path& path) {
            const Corpus c = load_corpus(path);
            const TransitionMatrix tm = transition_matrix(c, std::nullopt);
            py::dict d;
            d["videos"] = c.videos.size();
            d["segments"] = c.num_segments();
            d["verbs"] = c.vocabulary.num_verbs();
            d["nouns"] = c.vocabulary.num_nouns();
            d["feature_dim"] = c.feature_dim();
            const auto priors = class_priors(c, std::nullopt);
            py::array_t<double> prior_array(std::vector<py::ssize_t>{kNumStateClasses});
            std::copy(priors.begin(), priors.end(), prior_array.mutable_data());
            d["class_priors"] = prior_array;
            d["transition_counts"] = grid_array(tm.counts);
            d["transition_matrix"] = grid_array(tm.normalized);
            return d;
        },
        py::arg("path"));

    m.def(
        "predict_corpus",
        [](const std::filesystem::path& checkpoint, const std::filesystem::path& corpus_path, const std::string& split,
           int window) {
            const AnticipationModel model = load_checkpoint(checkpoint);
            const Corpus c = load_corpus(corpus_path);
            if (model.vocabulary_fingerprint() != c.vocabulary.fingerprint()) {
                throw ValidationError("checkpoint was trained on a different vocabulary");
            }
            SampleOptions opts;
            opts.window = window;
            const auto samples = build_decision_samples(c, split_arg(split), opts);
            std::vector<PredictionDistribution> preds;
            {
                py::gil_scoped_release release;
                preds = predict_all(model, samples);
            }
            py::array_t<double> probs({static_cast<py::ssize_t>(preds.size()), static_cast<py::ssize_t>(kNumStateClasses)});
            py::array_t<int> targets(std::vector<py::ssize_t>{static_cast<py::ssize_t>(samples.size())});
            auto p = probs.mutable_unchecked<2>();
            auto t = targets.mutable_unchecked<1>();
            for (std::size_t i = 0; i < preds.size(); ++i) {
                for (int k = 0; k < kNumStateClasses; ++k) p(static_cast<py::ssize_t>(i), k) = preds[i].probs[static_cast<std::size_t>(k)];
                t(static_cast<py::ssize_t>(i)) = index_of(samples[i].target);
            }
            return py::make_tuple(probs, targets);
        },
        py::arg("checkpoint"), py::arg("corpus"), py::arg("split") = "test", py::arg("window") = 1,
        "(probs (N, 9), targets (N,)) for every decision point of a split");

    m.def(
        "run",
        [](const std::string& command, const std::map<std::string, std::string>& overrides,
           std::optional<std::filesystem::path> config) {
            std::ostringstream log, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(command, overrides, config, log, err);
            }
            return py::make_tuple(code, log.str(), err.str());
        },
        py::arg("command"), py::arg("overrides") = std::map<std::string, std::string>{}, py::arg("config") = py::none(),
        "run one CLI command; returns (exit_code, log, errors)");
}
