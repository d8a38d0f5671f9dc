#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "osca/errors.hpp"

namespace osca::cli {

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
    return v;
}

long long to_int(const std::string& s) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError("not an integer: '" + s + "'");
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError("not a nonnegative integer: '" + s + "'");
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("not a boolean: '" + s + "'");
}

std::vector<int> to_ints(const std::string& s) {
    std::vector<int> out;
    for (const auto& x : split_list(s)) out.push_back(static_cast<int>(to_int(x)));
    return out;
}

std::string join(const auto& xs) {
    std::ostringstream o;
    o << std::setprecision(17);
    bool first = true;
    for (const auto& x : xs) {
        if (!first) o << ",";
        o << x;
        first = false;
    }
    return o.str();
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

void encoder_keys(std::map<std::string, Setter>& keys, const std::string& prefix, EncoderConfig ModelConfig::*member) {
    keys[prefix + ".hidden_size"] = [member](ExperimentConfig& c, const std::string& v) {
        (c.model.*member).hidden_size = static_cast<int>(to_int(v));
    };
    keys[prefix + ".mlp_sizes"] = [member](ExperimentConfig& c, const std::string& v) {
        (c.model.*member).mlp_sizes = to_ints(v);
    };
    keys[prefix + ".embedding_dim"] = [member](ExperimentConfig& c, const std::string& v) {
        (c.model.*member).embedding_dim = static_cast<int>(to_int(v));
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> keys = [] {
        std::map<std::string, Setter> k;
        k["seed"] = [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64(v); };
        k["out"] = [](ExperimentConfig& c, const std::string& v) { c.out = v; };
        k["corpus"] = [](ExperimentConfig& c, const std::string& v) {
            if (!v.empty()) c.corpus = v;
        };
        k["checkpoint"] = [](ExperimentConfig& c, const std::string& v) {
            if (!v.empty()) c.checkpoint = v;
        };

        k["synth.num_videos"] = [](ExperimentConfig& c, const std::string& v) { c.synth.num_videos = static_cast<int>(to_int(v)); };
        k["synth.min_segments"] = [](ExperimentConfig& c, const std::string& v) { c.synth.min_segments = static_cast<int>(to_int(v)); };
        k["synth.max_segments"] = [](ExperimentConfig& c, const std::string& v) { c.synth.max_segments = static_cast<int>(to_int(v)); };
        k["synth.verbs_per_state"] = [](ExperimentConfig& c, const std::string& v) { c.synth.verbs_per_state = static_cast<int>(to_int(v)); };
        k["synth.nouns_per_state"] = [](ExperimentConfig& c, const std::string& v) { c.synth.nouns_per_state = static_cast<int>(to_int(v)); };
        k["synth.feature_dim"] = [](ExperimentConfig& c, const std::string& v) { c.synth.feature_dim = static_cast<int>(to_int(v)); };
        k["synth.feature_steps"] = [](ExperimentConfig& c, const std::string& v) { c.synth.feature_steps = static_cast<int>(to_int(v)); };
        k["synth.feature_informativeness"] = [](ExperimentConfig& c, const std::string& v) { c.synth.feature_informativeness = to_double(v); };
        k["synth.action_informativeness"] = [](ExperimentConfig& c, const std::string& v) { c.synth.action_informativeness = to_double(v); };
        k["synth.occlusion_rate"] = [](ExperimentConfig& c, const std::string& v) { c.synth.occlusion_rate = to_double(v); };
        k["synth.small_box_rate"] = [](ExperimentConfig& c, const std::string& v) { c.synth.small_box_rate = to_double(v); };
        k["synth.transition_peak"] = [](ExperimentConfig& c, const std::string& v) { c.transition_peak = to_double(v); };
        k["synth.transitions"] = [](ExperimentConfig& c, const std::string& v) {
            if (v != "predictive" && v != "uniform") throw ConfigError("expected predictive or uniform, got '" + v + "'");
            c.transitions = v;
        };
        k["synth.class_priors"] = [](ExperimentConfig& c, const std::string& v) {
            const auto xs = split_list(v);
            if (xs.size() != kNumStateClasses) throw ConfigError("expected 9 comma-separated values");
            for (std::size_t i = 0; i < xs.size(); ++i) c.synth.class_priors[i] = to_double(xs[i]);
        };

        k["annotate.area_threshold"] = [](ExperimentConfig& c, const std::string& v) { c.area_threshold = to_double(v); };

        k["split.ratios"] = [](ExperimentConfig& c, const std::string& v) {
            const auto xs = split_list(v);
            if (xs.size() != 3) throw ConfigError("expected train,val,test ratios");
            for (std::size_t i = 0; i < 3; ++i) c.split_ratios[i] = to_double(xs[i]);
        };

        k["model.streams"] = [](ExperimentConfig& c, const std::string& v) { c.model.streams = StreamSet::parse(v); };
        k["model.fusion_sizes"] = [](ExperimentConfig& c, const std::string& v) { c.model.fusion_sizes = to_ints(v); };
        encoder_keys(k, "model.visual", &ModelConfig::visual);
        encoder_keys(k, "model.action", &ModelConfig::action);
        encoder_keys(k, "model.state", &ModelConfig::state);

        k["train.epochs"] = [](ExperimentConfig& c, const std::string& v) { c.train.epochs = static_cast<int>(to_int(v)); };
        k["train.batch_size"] = [](ExperimentConfig& c, const std::string& v) { c.train.batch_size = static_cast<int>(to_int(v)); };
        k["train.learning_rate"] = [](ExperimentConfig& c, const std::string& v) { c.train.learning_rate = to_double(v); };
        k["train.beta1"] = [](ExperimentConfig& c, const std::string& v) { c.train.beta1 = to_double(v); };
        k["train.beta2"] = [](ExperimentConfig& c, const std::string& v) { c.train.beta2 = to_double(v); };
        k["train.adam_epsilon"] = [](ExperimentConfig& c, const std::string& v) { c.train.adam_epsilon = to_double(v); };

        k["samples.window"] = [](ExperimentConfig& c, const std::string& v) { c.samples.window = static_cast<int>(to_int(v)); };
        k["samples.max_history"] = [](ExperimentConfig& c, const std::string& v) {
            if (v == "none" || v.empty()) {
                c.samples.max_history.reset();
            } else {
                c.samples.max_history = static_cast<int>(to_int(v));
            }
        };

        k["recognizer"] = [](ExperimentConfig& c, const std::string& v) { c.recognizer = parse_recognizer(v); };
        k["noise"] = [](ExperimentConfig& c, const std::string& v) { c.noise = v; };
        k["eval.split"] = [](ExperimentConfig& c, const std::string& v) {
            if (v != "all") parse_split(v);
            c.eval_split = v;
        };
        k["sweep.levels"] = [](ExperimentConfig& c, const std::string& v) {
            c.noise_levels.clear();
            for (const auto& pair : split_list(v, ';')) {
                const auto xs = split_list(pair, ',');
                if (xs.size() != 2) throw ConfigError("levels are 'a,s' pairs separated by ';'");
                c.noise_levels.push_back({to_double(xs[0]), to_double(xs[1])});
            }
        };
        k["sweep.seeds"] = [](ExperimentConfig& c, const std::string& v) {
            c.sweep_seeds.clear();
            for (const auto& x : split_list(v)) c.sweep_seeds.push_back(to_u64(x));
        };
        k["plots"] = [](ExperimentConfig& c, const std::string& v) { c.plots = to_bool(v); };
        return k;
    }();
    return keys;
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& source) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    std::vector<std::string> problems;
    while (std::getline(in, line)) {
        ++n;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back(source + ":" + std::to_string(n) + ": expected 'key = value'");
            continue;
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    if (!problems.empty()) {
        std::string msg = "malformed config:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return parse_key_values(s.str(), path.string());
}

ExperimentConfig build_config(const KeyValues& values) {
    ExperimentConfig cfg;
    cfg.synth = default_synth_config();

    std::vector<std::string> problems;
    const auto& keys = setters();
    for (const auto& [key, value] : values) {
        auto it = keys.find(key);
        if (it == keys.end()) {
            problems.push_back("unknown key '" + key + "'");
            continue;
        }
        try {
            it->second(cfg, value);
        } catch (const Error& e) {
            problems.push_back(key + ": " + e.what());
        }
    }

    cfg.synth.seed = cfg.seed;
    if (!cfg.noise.empty()) {
        try {
            cfg.recognizer = parse_recognizer("noisy(" + cfg.noise + "," + std::to_string(cfg.seed) + ")");
        } catch (const Error& e) {
            problems.push_back(std::string("noise: ") + e.what());
        }
    }
    cfg.train.seed = cfg.seed;
    try {
        cfg.synth.transition_matrix = cfg.transitions == "uniform"
                                          ? uniform_transitions()
                                          : state_predictive_transitions(cfg.transition_peak, cfg.synth.class_priors);
    } catch (const Error& e) {
        problems.push_back(std::string("synth.transition_peak: ") + e.what());
    }
    for (const auto& p : cfg.synth.validate()) problems.push_back("synth: " + p);
    for (const auto& p : cfg.train.validate()) problems.push_back(p);
    // vocabulary sizes and feature width come from the corpus; check the rest here
    ModelConfig probe = cfg.model;
    probe.num_verbs = probe.num_nouns = 1;
    probe.feature_dim = 1;
    for (const auto& p : probe.validate()) problems.push_back(p);
    if (!(cfg.area_threshold >= 0)) problems.emplace_back("annotate.area_threshold must be >= 0");
    double total = 0;
    for (double r : cfg.split_ratios) {
        if (!(r > 0)) problems.emplace_back("split.ratios must be positive");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-6) problems.emplace_back("split.ratios must sum to 1");
    if (cfg.samples.window < 1) problems.emplace_back("samples.window must be >= 1");
    if (cfg.samples.max_history && *cfg.samples.max_history < 1) problems.emplace_back("samples.max_history must be >= 1");
    if (cfg.noise_levels.empty()) problems.emplace_back("sweep.levels must not be empty");
    for (const auto& l : cfg.noise_levels) {
        if (!(l.action_rate >= 0 && l.action_rate <= 1 && l.state_rate >= 0 && l.state_rate <= 1)) {
            problems.emplace_back("sweep.levels entries must lie in [0, 1]");
            break;
        }
    }
    if (cfg.sweep_seeds.empty()) problems.emplace_back("sweep.seeds must not be empty");

    if (!problems.empty()) {
        std::string msg = std::to_string(problems.size()) + " config problem(s):";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    return cfg;
}

std::string render_config(const ExperimentConfig& c) {
    std::ostringstream o;
    o << std::setprecision(17);
    auto enc = [&](const char* name, const EncoderConfig& e) {
        o << "model." << name << ".hidden_size = " << e.hidden_size << "\n";
        o << "model." << name << ".mlp_sizes = " << join(e.mlp_sizes) << "\n";
        o << "model." << name << ".embedding_dim = " << e.embedding_dim << "\n";
    };
    o << "seed = " << c.seed << "\n";
    o << "out = " << c.out.string() << "\n";
    o << "corpus = " << (c.corpus ? c.corpus->string() : "") << "\n";
    o << "checkpoint = " << (c.checkpoint ? c.checkpoint->string() : "") << "\n";
    o << "synth.num_videos = " << c.synth.num_videos << "\n";
    o << "synth.min_segments = " << c.synth.min_segments << "\n";
    o << "synth.max_segments = " << c.synth.max_segments << "\n";
    o << "synth.verbs_per_state = " << c.synth.verbs_per_state << "\n";
    o << "synth.nouns_per_state = " << c.synth.nouns_per_state << "\n";
    o << "synth.feature_dim = " << c.synth.feature_dim << "\n";
    o << "synth.feature_steps = " << c.synth.feature_steps << "\n";
    o << "synth.feature_informativeness = " << c.synth.feature_informativeness << "\n";
    o << "synth.action_informativeness = " << c.synth.action_informativeness << "\n";
    o << "synth.occlusion_rate = " << c.synth.occlusion_rate << "\n";
    o << "synth.small_box_rate = " << c.synth.small_box_rate << "\n";
    o << "synth.transitions = " << c.transitions << "\n";
    o << "synth.transition_peak = " << c.transition_peak << "\n";
    o << "synth.class_priors = " << join(c.synth.class_priors) << "\n";
    o << "annotate.area_threshold = " << c.area_threshold << "\n";
    o << "split.ratios = " << join(c.split_ratios) << "\n";
    o << "model.streams = " << c.model.streams.to_string() << "\n";
    enc("visual", c.model.visual);
    enc("action", c.model.action);
    enc("state", c.model.state);
    o << "model.fusion_sizes = " << join(c.model.fusion_sizes) << "\n";
    o << "train.epochs = " << c.train.epochs << "\n";
    o << "train.batch_size = " << c.train.batch_size << "\n";
    o << "train.learning_rate = " << c.train.learning_rate << "\n";
    o << "train.beta1 = " << c.train.beta1 << "\n";
    o << "train.beta2 = " << c.train.beta2 << "\n";
    o << "train.adam_epsilon = " << c.train.adam_epsilon << "\n";
    o << "samples.window = " << c.samples.window << "\n";
    o << "samples.max_history = " << (c.samples.max_history ? std::to_string(*c.samples.max_history) : "none") << "\n";
    o << "recognizer = " << to_string(c.recognizer) << "\n";
    o << "noise = " << c.noise << "\n";
    o << "eval.split = " << c.eval_split << "\n";
    o << "sweep.levels = ";
    for (std::size_t i = 0; i < c.noise_levels.size(); ++i) {
        o << (i ? ";" : "") << c.noise_levels[i].action_rate << "," << c.noise_levels[i].state_rate;
    }
    o << "\n";
    o << "sweep.seeds = " << join(c.sweep_seeds) << "\n";
    o << "plots = " << (c.plots ? "true" : "false") << "\n";
    return o.str();
}

}  // namespace osca::cli
