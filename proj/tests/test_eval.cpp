#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "osca/errors.hpp"
#include "osca/eval.hpp"
#include "support.hpp"

using namespace osca;
using osca::testing::random_metric_instance;

namespace {

PredictionDistribution one_hot(int c) {
    PredictionDistribution p{};
    p.probs[static_cast<std::size_t>(c)] = 1.0;
    return p;
}

}  // namespace

TEST_CASE("metric examples") {
    // perfect predictions on three classes
    std::vector<PredictionDistribution> preds = {one_hot(0), one_hot(2), one_hot(8)};
    std::vector<StateChange> targets = {StateChange::activate, StateChange::deposit, StateChange::no_osc};
    CHECK(topk_mean_accuracy(preds, targets, 1) == 100.0);
    CHECK(macro_f1(preds, targets) == 100.0);

    // rare class fully wrong, common class right: macro 50, micro 90
    preds.clear();
    targets.clear();
    for (int i = 0; i < 9; ++i) {
        preds.push_back(one_hot(2));
        targets.push_back(StateChange::deposit);
    }
    preds.push_back(one_hot(2));
    targets.push_back(StateChange::deform);
    CHECK(topk_mean_accuracy(preds, targets, 1) == doctest::Approx(50.0));
    CHECK(micro_accuracy(preds, targets) == doctest::Approx(90.0));
    const auto r = evaluate(preds, targets);
    CHECK(r.absent_classes.size() == 7);
    CHECK(r.per_class[6].recall == 0.0);
    CHECK(r.per_class[2].precision == doctest::Approx(90.0));
    CHECK(r.n_samples == 10);

    CHECK_THROWS_AS(topk_mean_accuracy(preds, targets, 0), DomainError);
    CHECK_THROWS_AS(topk_mean_accuracy(preds, targets, 10), DomainError);
    targets.pop_back();
    CHECK_THROWS_AS(macro_f1(preds, targets), ShapeError);
    CHECK_THROWS_AS(topk_mean_accuracy({}, {}, 1), ValidationError);
}

TEST_CASE("metrics match brute force on random instances") {
    Rng rng = derive_rng(42, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto inst = random_metric_instance(rng);
        CAPTURE(trial);
        for (int k = 1; k <= 9; ++k) {
            CHECK(topk_mean_accuracy(inst.preds, inst.targets, k) == osca::testing::oracle_topk(inst.preds, inst.targets, k));
        }
        CHECK(macro_f1(inst.preds, inst.targets) == osca::testing::oracle_macro_f1(inst.preds, inst.targets));
        const auto m = confusion(inst.preds, inst.targets);
        const auto o = osca::testing::oracle_confusion(inst.preds, inst.targets);
        for (std::size_t i = 0; i < 9; ++i) {
            for (std::size_t j = 0; j < 9; ++j) CHECK(m[i][j] == o[i][j]);
        }
    }
}

TEST_CASE("top-k is monotone and k = 9 is 100") {
    Rng rng = derive_rng(43, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto inst = random_metric_instance(rng);
        double prev = 0;
        for (int k = 1; k <= 9; ++k) {
            const double a = topk_mean_accuracy(inst.preds, inst.targets, k);
            CHECK(a >= prev);
            prev = a;
        }
        CHECK(prev == 100.0);
    }
}

TEST_CASE("duplicating the data leaves the metrics unchanged") {
    Rng rng = derive_rng(44, 0);
    for (int trial = 0; trial < 50; ++trial) {
        auto inst = random_metric_instance(rng);
        const auto before = evaluate(inst.preds, inst.targets);
        const auto n = inst.preds.size();
        for (std::size_t i = 0; i < n; ++i) {
            inst.preds.push_back(inst.preds[i]);
            inst.targets.push_back(inst.targets[i]);
        }
        const auto after = evaluate(inst.preds, inst.targets);
        CHECK(after.top1_macc == doctest::Approx(before.top1_macc));
        CHECK(after.top5_macc == doctest::Approx(before.top5_macc));
        CHECK(after.macro_f1 == doctest::Approx(before.macro_f1));
    }
}

TEST_CASE("metrics json") {
    std::vector<PredictionDistribution> preds = {one_hot(0), one_hot(1)};
    std::vector<StateChange> targets = {StateChange::activate, StateChange::activate};
    const auto j = nlohmann::json::parse(metrics_to_json(evaluate(preds, targets)));
    CHECK(j["top1_macc"].get<double>() == 50.0);
    CHECK(j["per_class"]["activate"]["support"].get<long>() == 2);
    CHECK(j["absent_classes"].size() == 8);
}

TEST_CASE("transition matrix and histograms") {
    Corpus c;
    c.vocabulary = LabelVocabulary({"a", "b"}, {"x"});
    ActivityVideo v;
    v.video_id = "v";
    const std::vector<StateChange> seq = {StateChange::activate, StateChange::deactivate, StateChange::activate,
                                          StateChange::deactivate, StateChange::no_osc};
    for (std::size_t i = 0; i < seq.size(); ++i) {
        Segment s = osca::testing::segment("s" + std::to_string(i), 10L * static_cast<long>(i), 10L * static_cast<long>(i) + 5,
                                           10L * static_cast<long>(i) + 2, seq[i]);
        s.action = {static_cast<int>(i % 2), 0};
        v.segments.push_back(s);
    }
    c.videos.push_back(v);
    const auto tm = transition_matrix(c, std::nullopt);
    CHECK(tm.total() == 4);
    CHECK(tm.counts[0][1] == 2);
    CHECK(tm.counts[1][0] == 1);
    CHECK(tm.counts[1][8] == 1);
    CHECK(tm.normalized[1][8] == 0.5);
    CHECK(tm.empty_row[8]);
    CHECK_FALSE(tm.empty_row[0]);

    const auto h = state_histograms(c);
    REQUIRE(h.verb_by_state.size() == 2);
    CHECK(h.verb_by_state[0].label == 0);  // 3 occurrences
    CHECK(h.verb_by_state[0].total == 3);
    CHECK(h.verb_by_state[0].distinct_states == 2);
    CHECK(h.states_per_noun[3] == 1);
    CHECK(h.segments_per_state[0] == 2);
}

TEST_CASE("noise sweep") {
    SynthConfig cfg = default_synth_config();
    cfg.num_videos = 8;
    cfg.feature_dim = 4;
    cfg.feature_steps = 2;
    const Corpus c = generate_synthetic(cfg);
    AnticipationModel m(osca::testing::small_model_config(4, c.vocabulary.num_verbs(), c.vocabulary.num_nouns(), kAllStreams),
                        c.vocabulary.fingerprint(), 1);
    m.parameters().values() *= 5.0;
    const std::vector<std::uint64_t> seeds = {1, 2, 3};
    const auto rows = noise_sweep(c, std::nullopt, m, kReferenceNoiseLevels, seeds);
    REQUIRE(rows.size() == 4);

    const auto samples = build_decision_samples(c, std::nullopt);
    std::vector<StateChange> targets;
    for (const auto& s : samples) targets.push_back(s.target);
    const auto oracle = evaluate(predict_all(m, samples), targets);
    for (const auto& r : rows[0].per_seed) {
        CHECK(r.top1_macc == oracle.top1_macc);
        CHECK(r.macro_f1 == oracle.macro_f1);
    }
    CHECK(rows[0].top1_std == 0.0);

    const auto again = noise_sweep(c, std::nullopt, m, kReferenceNoiseLevels, seeds);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(again[i].top1_mean == rows[i].top1_mean);

    const auto path = std::filesystem::temp_directory_path() / "osca_unit_sweep.csv";
    write_sweep_csv(rows, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "action_noise,state_noise,top1,top5,f1,stddev");

    CHECK_THROWS_AS(noise_sweep(c, std::nullopt, m, {}, seeds), ConfigError);
}
