#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "osca/annotation.hpp"
#include "osca/errors.hpp"
#include "osca/labels.hpp"
#include "plots.hpp"

namespace osca::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << std::setprecision(9);
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::optional<Split> split_of(const std::string& name) {
    if (name == "all") return std::nullopt;
    return parse_split(name);
}

void class_header(std::ostream& out, const char* first) {
    out << first;
    for (int c = 0; c < kNumStateClasses; ++c) out << ',' << to_string(static_cast<StateChange>(c));
    out << '\n';
}

struct Context {
    const ExperimentConfig& cfg;
    std::ostream& log;

    fs::path path(const std::string& name) const { return cfg.out / name; }

    // Refuses to write over any file the command reads.
    void guard_inputs() const {
        const auto out_dir = fs::weakly_canonical(cfg.out);
        for (const auto& input : {cfg.corpus, cfg.checkpoint}) {
            if (!input) continue;
            const auto in = fs::weakly_canonical(*input);
            if (in.parent_path() == out_dir) {
                throw ConfigError("output directory " + cfg.out.string() + " holds input " + input->string() +
                                  "; choose another --out");
            }
        }
    }

    Corpus input_corpus(bool required) const {
        if (cfg.corpus) {
            Corpus c = load_corpus(*cfg.corpus);
            log << "loaded " << c.videos.size() << " videos from " << cfg.corpus->string() << "\n";
            return c;
        }
        if (required) throw ConfigError("this command needs --corpus");
        log << "no --corpus given; synthesizing " << cfg.synth.num_videos << " videos (seed " << cfg.seed << ")\n";
        return generate_synthetic(cfg.synth);
    }

    Corpus with_split(Corpus c) const {
        if (!c.split_assignment.empty()) return c;
        log << "corpus has no split; splitting with seed " << cfg.seed << "\n";
        return split(std::move(c), cfg.split_ratios, cfg.seed);
    }

    ModelConfig model_config(const Corpus& c) const {
        ModelConfig m = model_config_for(c, cfg.model.streams);
        m.visual = cfg.model.visual;
        m.action = cfg.model.action;
        m.state = cfg.model.state;
        m.fusion_sizes = cfg.model.fusion_sizes;
        if (auto problems = m.validate(); !problems.empty()) {
            std::string msg = "model config does not fit the corpus:";
            for (const auto& p : problems) msg += "\n  " + p;
            throw ConfigError(msg);
        }
        return m;
    }

    AnticipationModel model_for(const Corpus& c) const {
        if (!cfg.checkpoint) {
            log << "no --checkpoint given; evaluating an untrained model (seed " << cfg.seed << ")\n";
            return AnticipationModel(model_config(c), c.vocabulary.fingerprint(), cfg.seed);
        }
        AnticipationModel m = load_checkpoint(*cfg.checkpoint);
        if (m.vocabulary_fingerprint() != c.vocabulary.fingerprint()) {
            throw ValidationError("checkpoint " + cfg.checkpoint->string() + " was trained on a different vocabulary");
        }
        if (m.config().feature_dim != c.feature_dim() && m.config().streams.visual) {
            throw ShapeError("checkpoint expects feature width " + std::to_string(m.config().feature_dim) +
                             ", corpus has " + std::to_string(c.feature_dim()));
        }
        return m;
    }

    void write_split_csv(const Corpus& c) const {
        const fs::path p = path("split.csv");
        auto out = open_out(p);
        out << "video_id,split\n";
        for (const auto& v : c.videos) {
            auto it = c.split_assignment.find(v.video_id);
            out << v.video_id << ',' << (it == c.split_assignment.end() ? "" : std::string(to_string(it->second))) << '\n';
        }
        finish(out, p);
    }
};

void cmd_annotate(const Context& ctx) {
    const Corpus c = ctx.input_corpus(true);
    AuditReport total;
    const fs::path jsonl = ctx.path("annotations.jsonl");
    auto out = open_out(jsonl);
    for (const auto& v : c.videos) {
        const VideoAnnotation a = annotate_video(v, ctx.cfg.area_threshold);
        out << annotation_to_jsonl(a, v.video_id);
        total += a.audit;
    }
    finish(out, jsonl);

    nlohmann::ordered_json j;
    j["videos"] = c.videos.size();
    j["total"] = total.total;
    j["annotated"] = total.annotated;
    j["rejected_pnr_order"] = total.rejected_pnr_order;
    j["rejected_occlusion"] = total.rejected_occlusion;
    j["rejected_area"] = total.rejected_area;
    j["skipped_no_osc"] = total.skipped_no_osc;
    const fs::path audit = ctx.path("audit.json");
    auto a = open_out(audit);
    a << j.dump(2) << '\n';
    finish(a, audit);

    const fs::path csv = ctx.path("audit.csv");
    auto t = open_out(csv);
    t << "status,count\nannotated," << total.annotated << "\nrejected_pnr_order," << total.rejected_pnr_order
      << "\nrejected_occlusion," << total.rejected_occlusion << "\nrejected_area," << total.rejected_area
      << "\nskipped_no_osc," << total.skipped_no_osc << '\n';
    finish(t, csv);
    if (ctx.cfg.plots) plot_bars(csv, "status", "count", "annotation audit", ctx.path("audit.svg"));

    ctx.log << "annotated " << total.annotated << " of " << total.total << " segments ("
            << total.rejected_pnr_order << " pnr order, " << total.rejected_occlusion << " occlusion, "
            << total.rejected_area << " area, " << total.skipped_no_osc << " no_osc skipped)\n";
}

void cmd_synth(const Context& ctx) {
    Corpus c = generate_synthetic(ctx.cfg.synth);
    c = split(std::move(c), ctx.cfg.split_ratios, ctx.cfg.seed);
    save_corpus(c, ctx.path("corpus.jsonl"));
    ctx.write_split_csv(c);
    ctx.log << "wrote " << c.videos.size() << " videos, " << c.num_segments() << " segments to "
            << ctx.path("corpus.jsonl").string() << "\n";
}

void cmd_split(const Context& ctx) {
    Corpus c = split(ctx.input_corpus(true), ctx.cfg.split_ratios, ctx.cfg.seed);
    save_corpus(c, ctx.path("corpus.jsonl"));
    ctx.write_split_csv(c);
    ctx.log << "train/val/test videos: " << c.videos_in(Split::train).size() << "/" << c.videos_in(Split::val).size()
            << "/" << c.videos_in(Split::test).size() << "\n";
}

void cmd_train(const Context& ctx) {
    const Corpus c = ctx.with_split(ctx.input_corpus(false));
    ctx.write_split_csv(c);
    const auto train_samples = build_decision_samples(c, Split::train, ctx.cfg.samples);
    const auto val_samples = build_decision_samples(c, Split::val, ctx.cfg.samples);
    if (train_samples.empty()) throw ValidationError("no training samples (videos need at least two segments)");
    ctx.log << train_samples.size() << " train / " << val_samples.size() << " val samples, streams "
            << ctx.cfg.model.streams.to_string() << "\n";

    auto on_epoch = [&](const EpochRecord& r) {
        ctx.log << "epoch " << std::setw(3) << r.epoch << "  train " << std::fixed << std::setprecision(4)
                << r.train_loss << "  val " << r.val_loss << "  top1 " << std::setprecision(2) << r.val_top1 << "\n"
                << std::defaultfloat;
    };
    const TrainResult res =
        train(train_samples, val_samples, ctx.model_config(c), ctx.cfg.train, c.vocabulary.fingerprint(), on_epoch);
    save_checkpoint(res.model, ctx.path("model.ckpt"));
    write_history_csv(res.history, ctx.path("history.csv"));
    if (ctx.cfg.plots) {
        plot_lines(ctx.path("history.csv"), "epoch", {"train_loss", "val_loss"}, "loss", ctx.path("loss.svg"));
    }
    ctx.log << "best epoch " << res.best_epoch << "; checkpoint " << ctx.path("model.ckpt").string() << "\n";
}

void cmd_eval(const Context& ctx) {
    const Corpus c = ctx.with_split(ctx.input_corpus(false));
    const AnticipationModel model = ctx.model_for(c);
    const auto which = split_of(ctx.cfg.eval_split);
    const auto samples = build_decision_samples(c, which, ctx.cfg.samples);
    if (samples.empty()) throw ValidationError("no decision samples in split '" + ctx.cfg.eval_split + "'");

    std::vector<Histories> recognized;
    if (!std::holds_alternative<OracleRecognizer>(ctx.cfg.recognizer)) {
        recognized = recognized_sample_histories(c, which, ctx.cfg.recognizer, ctx.cfg.samples);
    }
    const auto preds = predict_all(model, samples, recognized);
    std::vector<StateChange> targets;
    for (const auto& s : samples) targets.push_back(s.target);
    const MetricsReport report = evaluate(preds, targets);

    const fs::path json = ctx.path("metrics.json");
    auto j = open_out(json);
    j << metrics_to_json(report) << '\n';
    finish(j, json);

    const fs::path per_class = ctx.path("per_class.csv");
    auto pc = open_out(per_class);
    pc << "class,support,predicted,recall,precision,f1,present\n";
    for (int k = 0; k < kNumStateClasses; ++k) {
        const auto& m = report.per_class[static_cast<std::size_t>(k)];
        pc << to_string(static_cast<StateChange>(k)) << ',' << m.support << ',' << m.predicted << ',' << m.recall
           << ',' << m.precision << ',' << m.f1 << ',' << (m.present ? 1 : 0) << '\n';
    }
    finish(pc, per_class);

    const ConfusionMatrix cm = confusion(preds, targets);
    const fs::path conf = ctx.path("confusion.csv");
    auto cf = open_out(conf);
    class_header(cf, "target");
    for (int r = 0; r < kNumStateClasses; ++r) {
        cf << to_string(static_cast<StateChange>(r));
        for (long v : cm[static_cast<std::size_t>(r)]) cf << ',' << v;
        cf << '\n';
    }
    finish(cf, conf);

    const fs::path pred_path = ctx.path("predictions.csv");
    auto pp = open_out(pred_path);
    pp << "video_id,decision_index,target,predicted";
    for (int k = 0; k < kNumStateClasses; ++k) pp << ",p_" << to_string(static_cast<StateChange>(k));
    pp << '\n';
    for (std::size_t i = 0; i < samples.size(); ++i) {
        pp << samples[i].video_id << ',' << samples[i].decision_index << ',' << to_string(targets[i]) << ','
           << to_string(preds[i].argmax());
        for (double p : preds[i].probs) pp << ',' << p;
        pp << '\n';
    }
    finish(pp, pred_path);

    if (ctx.cfg.plots) plot_heatmap(conf, "confusion (rows: target)", ctx.path("confusion.svg"));
    ctx.log << std::fixed << std::setprecision(2) << "n=" << report.n_samples << "  top1 " << report.top1_macc
            << "  top5 " << report.top5_macc << "  f1 " << report.macro_f1 << "  (" << to_string(ctx.cfg.recognizer)
            << ", " << ctx.cfg.eval_split << ")\n"
            << std::defaultfloat;
}

void cmd_sweep(const Context& ctx) {
    const Corpus c = ctx.with_split(ctx.input_corpus(false));
    const AnticipationModel model = ctx.model_for(c);
    const auto rows =
        noise_sweep(c, split_of(ctx.cfg.eval_split), model, ctx.cfg.noise_levels, ctx.cfg.sweep_seeds, ctx.cfg.samples);
    write_sweep_csv(rows, ctx.path("sweep.csv"));

    const fs::path per_seed = ctx.path("sweep_per_seed.csv");
    auto out = open_out(per_seed);
    out << "action_noise,state_noise,seed,top1,top5,f1\n";
    for (const auto& r : rows) {
        for (std::size_t s = 0; s < r.per_seed.size(); ++s) {
            out << r.level.action_rate << ',' << r.level.state_rate << ',' << ctx.cfg.sweep_seeds[s] << ','
                << r.per_seed[s].top1_macc << ',' << r.per_seed[s].top5_macc << ',' << r.per_seed[s].macro_f1 << '\n';
        }
    }
    finish(out, per_seed);

    if (ctx.cfg.plots) {
        plot_lines(ctx.path("sweep.csv"), "action_noise", {"top1", "top5", "f1"}, "accuracy vs recognition noise",
                   ctx.path("sweep.svg"));
    }
    for (const auto& r : rows) {
        ctx.log << std::fixed << std::setprecision(2) << "noise " << r.level.action_rate << "," << r.level.state_rate
                << "  top1 " << r.top1_mean << " (sd " << r.top1_std << ")  top5 " << r.top5_mean << "  f1 "
                << r.f1_mean << "\n"
                << std::defaultfloat;
    }
}

void cmd_stats(const Context& ctx) {
    const Corpus c = ctx.input_corpus(false);
    const TransitionMatrix tm = transition_matrix(c, std::nullopt);

    const fs::path counts = ctx.path("transition_counts.csv");
    const fs::path norm = ctx.path("transition_matrix.csv");
    auto tc = open_out(counts);
    auto tn = open_out(norm);
    class_header(tc, "from");
    class_header(tn, "from");
    for (int r = 0; r < kNumStateClasses; ++r) {
        const auto ri = static_cast<std::size_t>(r);
        tc << to_string(static_cast<StateChange>(r));
        tn << to_string(static_cast<StateChange>(r));
        for (int k = 0; k < kNumStateClasses; ++k) {
            const auto ki = static_cast<std::size_t>(k);
            tc << ',' << tm.counts[ri][ki];
            tn << ',';
            if (!tm.empty_row[ri]) tn << tm.normalized[ri][ki];
        }
        tc << '\n';
        tn << '\n';
    }
    finish(tc, counts);
    finish(tn, norm);

    const StateHistograms h = state_histograms(c);
    const auto priors = class_priors(c, std::nullopt);
    const fs::path pri = ctx.path("class_priors.csv");
    auto pr = open_out(pri);
    pr << "class,count,prior\n";
    for (int k = 0; k < kNumStateClasses; ++k) {
        const auto ki = static_cast<std::size_t>(k);
        pr << to_string(static_cast<StateChange>(k)) << ',' << h.segments_per_state[ki] << ',' << priors[ki] << '\n';
    }
    finish(pr, pri);

    auto distinct = [&](const std::array<long, kNumStateClasses + 1>& hist, const char* what) {
        const fs::path p = ctx.path(std::string("states_per_") + what + ".csv");
        auto o = open_out(p);
        o << "distinct_states," << what << "s\n";
        for (std::size_t k = 0; k < hist.size(); ++k) o << k << ',' << hist[k] << '\n';
        finish(o, p);
        return p;
    };
    const fs::path per_verb = distinct(h.states_per_verb, "verb");
    const fs::path per_noun = distinct(h.states_per_noun, "noun");

    auto by_state = [&](const std::vector<LabelStateRow>& rows, const std::vector<std::string>& names, const char* what) {
        const fs::path p = ctx.path(std::string(what) + "_by_state.csv");
        auto o = open_out(p);
        class_header(o, what);
        for (const auto& r : rows) {
            o << names[static_cast<std::size_t>(r.label)];
            for (long v : r.counts) o << ',' << v;
            o << '\n';
        }
        finish(o, p);
    };
    by_state(h.verb_by_state, c.vocabulary.verbs(), "verb");
    by_state(h.noun_by_state, c.vocabulary.nouns(), "noun");

    if (ctx.cfg.plots) {
        plot_heatmap(norm, "state transitions P(next | current)", ctx.path("transition_matrix.svg"));
        plot_bars(pri, "class", "prior", "class priors", ctx.path("class_priors.svg"));
        plot_bars(per_verb, "distinct_states", "verbs", "states per verb", ctx.path("states_per_verb.svg"));
        plot_bars(per_noun, "distinct_states", "nouns", "states per noun", ctx.path("states_per_noun.svg"));
    }
    ctx.log << c.videos.size() << " videos, " << c.num_segments() << " segments, " << tm.total() << " transitions\n";
}

void cmd_compose_check(const Context& ctx) {
    const auto labels = all_frame_labels();
    const fs::path list = ctx.path("compose.csv");
    const fs::path grid = ctx.path("compose_grid.csv");
    auto l = open_out(list);
    auto g = open_out(grid);
    l << "first,second,result\n";
    g << "first";
    for (const auto& b : labels) g << ',' << to_string(b);
    g << '\n';
    std::array<long, kNumStateClasses> tally{};
    for (const auto& a : labels) {
        g << to_string(a);
        for (const auto& b : labels) {
            const StateChange r = compose_state_change(a, b);
            l << to_string(a) << ',' << to_string(b) << ',' << to_string(r) << '\n';
            g << ',' << to_string(r);
            ++tally[static_cast<std::size_t>(index_of(r))];
        }
        g << '\n';
    }
    finish(l, list);
    finish(g, grid);
    ctx.log << labels.size() * labels.size() << " pairs;";
    for (int k = 0; k < kNumStateClasses; ++k) {
        ctx.log << ' ' << to_string(static_cast<StateChange>(k)) << '=' << tally[static_cast<std::size_t>(k)];
    }
    ctx.log << "\n";
}

}  // namespace

int exit_code_for(const std::string& category) noexcept {
    if (category == "config") return kConfig;
    if (category == "validation") return kValidation;
    if (category == "io") return kIo;
    if (category == "domain") return kDomain;
    if (category == "shape") return kShape;
    if (category == "training") return kTraining;
    return kOther;
}

int run(const std::string& command, const KeyValues& overrides, const std::optional<fs::path>& config_path,
        std::ostream& log, std::ostream& err) {
    try {
        if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
            throw ConfigError("unknown command '" + command + "'");
        }
        KeyValues values = config_path ? read_key_values(*config_path) : KeyValues{};
        for (const auto& [k, v] : overrides) values[k] = v;
        const ExperimentConfig cfg = build_config(values);
        const Context ctx{cfg, log};
        ctx.guard_inputs();

        std::error_code ec;
        fs::create_directories(cfg.out, ec);
        if (ec) throw IoError("cannot create " + cfg.out.string() + ": " + ec.message());
        {
            const fs::path resolved = cfg.out / "config.resolved";
            auto out = open_out(resolved);
            out << "# osca " << command << "\n" << render_config(cfg);
            finish(out, resolved);
        }

        if (command == "annotate") cmd_annotate(ctx);
        else if (command == "synth") cmd_synth(ctx);
        else if (command == "split") cmd_split(ctx);
        else if (command == "train") cmd_train(ctx);
        else if (command == "eval") cmd_eval(ctx);
        else if (command == "sweep") cmd_sweep(ctx);
        else if (command == "stats") cmd_stats(ctx);
        else cmd_compose_check(ctx);
        return kOk;
    } catch (const Error& e) {
        err << "error [" << e.category() << "]: " << e.what() << "\n";
        return exit_code_for(e.category());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kOther;
    }
}

}  // namespace osca::cli
