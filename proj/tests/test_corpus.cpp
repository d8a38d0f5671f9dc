#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "osca/errors.hpp"
#include "osca/corpus.hpp"
#include "osca/eval.hpp"
#include "support.hpp"

using namespace osca;
namespace fs = std::filesystem;

#ifndef OSCA_TEST_DATA
#define OSCA_TEST_DATA "tests/data"
#endif

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("osca_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

std::string error_of(const fs::path& p) {
    try {
        load_corpus(p);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ActivityVideo video_of(int segments, int steps = 1, int dim = 2) {
    ActivityVideo v;
    v.video_id = "v";
    for (int k = 0; k < segments; ++k) {
        Segment s = osca::testing::segment("s" + std::to_string(k + 1), 10L * k, 10L * k + 9, 10L * k + 5,
                                           static_cast<StateChange>(k % 9));
        v.segments.push_back(s);
        FeatureSequence f;
        f.values = FeatureMatrix::Constant(steps, dim, static_cast<float>(k + 1));
        v.features.push_back(f);
    }
    return v;
}

}  // namespace

TEST_CASE("golden fixture") {
    const Corpus c = load_corpus(fs::path(OSCA_TEST_DATA) / "golden.jsonl");
    REQUIRE(c.videos.size() == 2);
    CHECK(c.videos[0].segments.size() == 3);
    CHECK(c.videos[1].segments.size() == 2);
    CHECK(c.vocabulary.num_verbs() == 4);
    CHECK(c.feature_dim() == 0);
    CHECK(c.split_assignment.at("kitchen_02") == Split::test);
    const Segment& a = c.videos[1].segments[0];
    CHECK(a.action == ActionLabel{2, 2});
    CHECK(a.pre_frame->occluded);
    CHECK(c.videos[0].segments[2].state_change == StateChange::no_osc);
    CHECK(c.videos[0].segments[2].pnr_frame == 81);
    CHECK(c.videos[0].segments[1].pre_frame->occluded == false);

    const auto ann = annotate_video(c.videos[0]);
    CHECK(ann.audit.annotated == 1);
    CHECK(ann.audit.rejected_area == 1);
    CHECK(ann.audit.skipped_no_osc == 1);
}

TEST_CASE("load errors") {
    const fs::path dir = scratch("load");
    write_text(dir / "empty.jsonl", "");
    CHECK(error_of(dir / "empty.jsonl").find("no records") != std::string::npos);

    write_text(dir / "bad.jsonl",
               "{\"kind\":\"vocab\",\"verbs\":[\"a\"],\"nouns\":[\"x\"]}\n"
               "{\"kind\":\"video\",\"video_id\":\"v\",\"segments\":[{\"segment_id\":\"s\",\"start\":0,\"end\":5,"
               "\"verb\":\"a\",\"noun\":\"x\"}]}\n");
    const std::string e = error_of(dir / "bad.jsonl");
    CHECK(e.find(":2:") != std::string::npos);
    CHECK(e.find("state_change") != std::string::npos);

    write_text(dir / "unknown.jsonl",
               "{\"kind\":\"vocab\",\"verbs\":[\"a\"],\"nouns\":[\"x\"]}\n"
               "{\"kind\":\"video\",\"video_id\":\"v\",\"segments\":[{\"segment_id\":\"s\",\"start\":0,\"end\":5,"
               "\"verb\":\"b\",\"noun\":\"x\",\"state_change\":\"deform\"}]}\n");
    CHECK(error_of(dir / "unknown.jsonl").find("verb") != std::string::npos);

    write_text(dir / "order.jsonl", "{\"kind\":\"video\",\"video_id\":\"v\",\"segments\":[]}\n");
    CHECK(error_of(dir / "order.jsonl").find("vocab") != std::string::npos);

    write_text(dir / "junk.jsonl", "{\"kind\":\"vocab\",\"verbs\":[\"a\"],\"nouns\":[\"x\"]}\nnot json\n");
    CHECK(error_of(dir / "junk.jsonl").find(":2:") != std::string::npos);

    CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl"), IoError);

    // two segments with different feature widths
    {
        std::ofstream bin(dir / "dims.features.bin", std::ios::binary);
        const float zeros[12] = {};
        bin.write(reinterpret_cast<const char*>(zeros), sizeof zeros);
    }
    write_text(dir / "dims.jsonl",
               "{\"kind\":\"vocab\",\"verbs\":[\"a\"],\"nouns\":[\"x\"],\"feature_file\":\"dims.features.bin\"}\n"
               "{\"kind\":\"video\",\"video_id\":\"v\",\"segments\":["
               "{\"segment_id\":\"s1\",\"start\":0,\"end\":5,\"verb\":\"a\",\"noun\":\"x\",\"state_change\":\"no_osc\"},"
               "{\"segment_id\":\"s2\",\"start\":5,\"end\":9,\"verb\":\"a\",\"noun\":\"x\",\"state_change\":\"no_osc\"}]}\n"
               "{\"kind\":\"features\",\"video_id\":\"v\",\"segment_id\":\"s1\",\"offset\":0,\"T\":2,\"D\":4}\n"
               "{\"kind\":\"features\",\"video_id\":\"v\",\"segment_id\":\"s2\",\"offset\":32,\"T\":2,\"D\":2}\n");
    const std::string d = error_of(dir / "dims.jsonl");
    CHECK(d.find("dimension mismatch") != std::string::npos);
    CHECK(d.find(":4:") != std::string::npos);
}

TEST_CASE("save/load round trip") {
    SynthConfig cfg = default_synth_config();
    cfg.num_videos = 5;
    cfg.feature_dim = 3;
    cfg.feature_steps = 2;
    cfg.occlusion_rate = 0.2;
    cfg.seed = 3;
    const Corpus c = split(generate_synthetic(cfg), {0.6, 0.2, 0.2}, 1);
    const fs::path dir = scratch("roundtrip");
    save_corpus(c, dir / "c.jsonl");
    const Corpus back = load_corpus(dir / "c.jsonl");
    CHECK(back.vocabulary == c.vocabulary);
    CHECK(back.split_assignment == c.split_assignment);
    REQUIRE(back.videos.size() == c.videos.size());
    for (std::size_t i = 0; i < c.videos.size(); ++i) {
        CHECK(back.videos[i].video_id == c.videos[i].video_id);
        CHECK(back.videos[i].segments == c.videos[i].segments);
        REQUIRE(back.videos[i].features.size() == c.videos[i].features.size());
        for (std::size_t k = 0; k < c.videos[i].features.size(); ++k) {
            CHECK(back.videos[i].features[k].values == c.videos[i].features[k].values);
        }
    }
    save_corpus(back, dir / "d.jsonl");
    CHECK(read_bytes(dir / "d.features.bin") == read_bytes(dir / "c.features.bin"));
}

TEST_CASE("decision samples") {
    const ActivityVideo v = video_of(5, 2, 3);
    const auto samples = build_decision_samples(v, {2, std::nullopt});
    REQUIRE(samples.size() == 4);
    const DecisionSample& s3 = samples[2];
    CHECK(s3.decision_index == 3);
    CHECK(s3.state_history.size() == 3);
    CHECK(s3.action_history.size() == 3);
    CHECK(s3.target == v.segments[3].state_change);
    REQUIRE(s3.visual_window.rows() == 4);
    CHECK(s3.visual_window(0, 0) == 2.0f);
    CHECK(s3.visual_window(3, 0) == 3.0f);
    CHECK(samples[0].visual_window.rows() == 2);

    CHECK(build_decision_samples(video_of(2)).size() == 1);
    CHECK(build_decision_samples(video_of(2))[0].state_history.size() == 1);
    CHECK(build_decision_samples(video_of(1)).empty());

    const auto trunc = build_decision_samples(v, {1, 2});
    CHECK(trunc[3].state_history.size() == 2);
    CHECK(trunc[3].state_history.back() == v.segments[3].state_change);
    CHECK_THROWS_AS(build_decision_samples(v, {0, std::nullopt}), ConfigError);
}

TEST_CASE("split") {
    SynthConfig cfg = default_synth_config();
    cfg.feature_dim = 0;
    cfg.num_videos = 10;
    Corpus c = generate_synthetic(cfg);
    const Corpus s = split(c, {0.6, 0.2, 0.2}, 4);
    CHECK(s.videos_in(Split::train).size() == 6);
    CHECK(s.videos_in(Split::val).size() == 2);
    CHECK(s.videos_in(Split::test).size() == 2);
    CHECK(split(c, {0.6, 0.2, 0.2}, 4).split_assignment == s.split_assignment);
    CHECK(split(c, {0.6, 0.2, 0.2}, 5).split_assignment != s.split_assignment);

    cfg.num_videos = 3;
    const Corpus t = split(generate_synthetic(cfg), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 0);
    CHECK(t.videos_in(Split::train).size() == 1);
    CHECK(t.videos_in(Split::val).size() == 1);
    CHECK(t.videos_in(Split::test).size() == 1);

    cfg.num_videos = 2;
    CHECK_THROWS_AS(split(generate_synthetic(cfg), {0.6, 0.2, 0.2}, 0), ConfigError);
    CHECK_THROWS_AS(split(c, {0.5, 0.2, 0.2}, 0), ConfigError);

    for (int n = 3; n < 40; ++n) {
        cfg.num_videos = n;
        const Corpus u = split(generate_synthetic(cfg), {0.6, 0.2, 0.2}, 9);
        const std::array<double, 3> r = {0.6, 0.2, 0.2};
        for (int k = 0; k < 3; ++k) {
            const double got = static_cast<double>(u.videos_in(static_cast<Split>(k)).size());
            CHECK(std::abs(got - r[static_cast<std::size_t>(k)] * n) < 1.0 + 1e-9);
        }
    }
}

TEST_CASE("class priors") {
    Corpus c;
    c.vocabulary = LabelVocabulary({"a"}, {"x"});
    ActivityVideo v;
    v.video_id = "v";
    for (StateChange s : {StateChange::other, StateChange::deposit, StateChange::remove, StateChange::deposit,
                          StateChange::remove}) {
        v.segments.push_back(osca::testing::segment("s", 0, 10, 5, s));
    }
    c.videos.push_back(v);
    const auto p = class_priors(c, std::nullopt);
    const std::array<double, 9> expected = {0, 0, 0.5, 0.5, 0, 0, 0, 0, 0};
    CHECK(p == expected);

    for (auto& s : c.videos[0].segments) s.state_change = StateChange::deform;
    const auto one = class_priors(c, std::nullopt);
    CHECK(one[6] == 1.0);
}

TEST_CASE("synthetic generator") {
    SynthConfig cfg = default_synth_config();
    cfg.num_videos = 6;
    cfg.feature_dim = 4;
    cfg.feature_steps = 2;
    cfg.seed = 17;
    const fs::path dir = scratch("synth");
    save_corpus(generate_synthetic(cfg), dir / "a.jsonl");
    save_corpus(generate_synthetic(cfg), dir / "b.jsonl");
    // the vocab line names the sidecar file, everything after it must match
    auto body = [](const std::string& t) { return t.substr(t.find('\n')); };
    CHECK(body(read_bytes(dir / "a.jsonl")) == body(read_bytes(dir / "b.jsonl")));
    CHECK(read_bytes(dir / "a.features.bin") == read_bytes(dir / "b.features.bin"));
    cfg.seed = 18;
    save_corpus(generate_synthetic(cfg), dir / "c.jsonl");
    CHECK(read_bytes(dir / "a.features.bin") != read_bytes(dir / "c.features.bin"));

    const Corpus c = generate_synthetic(cfg);
    CHECK_NOTHROW(validate_corpus(c));
    for (const auto& v : c.videos) {
        CHECK(static_cast<int>(v.segments.size()) >= cfg.min_segments);
        CHECK(static_cast<int>(v.segments.size()) <= cfg.max_segments);
        for (const auto& s : v.segments) {
            // each state draws from its own sub-vocabulary
            CHECK(s.action.verb / cfg.verbs_per_state == index_of(s.state_change));
            CHECK(s.action.noun / cfg.nouns_per_state == index_of(s.state_change));
        }
    }

    SynthConfig bad = cfg;
    bad.transition_matrix[2].fill(0.0);
    CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);
    bad = cfg;
    bad.class_priors[0] += 0.1;
    CHECK_THROWS_AS(generate_synthetic(bad), ConfigError);
}

TEST_CASE("reference priors") {
    const auto p = reference_class_priors();
    double total = 0;
    for (double x : p) total += x;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(14984.0 / 63923.0));
    const auto m = state_predictive_transitions(0.6, p);
    for (const auto& row : m) {
        double s = 0;
        for (double x : row) s += x;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("generator frequencies converge") {
    SynthConfig cfg = default_synth_config();
    cfg.feature_dim = 0;
    cfg.num_videos = 2000;
    cfg.min_segments = 10;
    cfg.max_segments = 10;
    // independent draws: every row equals the prior
    for (auto& row : cfg.transition_matrix) row = cfg.class_priors;
    const Corpus c = generate_synthetic(cfg);
    const auto hist = state_histograms(c);
    for (int k = 0; k < kNumStateClasses; ++k) {
        const double f = static_cast<double>(hist.segments_per_state[static_cast<std::size_t>(k)]) / 20000.0;
        CHECK(std::abs(f - cfg.class_priors[static_cast<std::size_t>(k)]) < 0.015);
    }
}
