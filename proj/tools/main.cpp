#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    using osca::cli::KeyValues;

    CLI::App app{"osca: object state change anticipation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config;
    std::string seed, out, streams, noise, window, corpus, checkpoint;
    std::vector<std::string> sets;
    bool no_plots = false;
    app.add_option("--config", config, "key = value config file");
    app.add_option("--seed", seed, "seed for synthesis, splits, init and shuffling");
    app.add_option("--out", out, "output directory");
    app.add_option("--streams", streams, "enabled streams, e.g. vid,action,state");
    app.add_option("--noise", noise, "recognition noise a,s (uses the noisy recognizer)");
    app.add_option("--window", window, "observed segments W in the visual window");
    app.add_option("--corpus", corpus, "corpus JSONL");
    app.add_option("--checkpoint", checkpoint, "model checkpoint");
    app.add_option("--set", sets, "extra config override key=value (repeatable)");
    app.add_flag("--no-plots", no_plots, "skip SVG plots");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"annotate", "label pre/post frames and audit rejections"},
        {"synth", "generate and split a synthetic corpus"},
        {"split", "assign train/val/test by video"},
        {"train", "fit the anticipation model"},
        {"eval", "score a checkpoint on one split"},
        {"sweep", "evaluate across recognition noise levels"},
        {"stats", "transition matrix, class priors and histograms"},
        {"compose-check", "tabulate the rule composer over all 256 frame-label pairs"},
    };
    std::string chosen;
    for (const auto& [name, help] : commands) {
        app.add_subcommand(name, help)->callback([&chosen, name = name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : osca::cli::kConfig;
    }

    KeyValues overrides;
    std::vector<std::string> bad;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            bad.push_back(s);
            continue;
        }
        overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (!bad.empty()) {
        std::cerr << "error [config]: --set expects key=value, got:";
        for (const auto& b : bad) std::cerr << " '" << b << "'";
        std::cerr << "\n";
        return osca::cli::kConfig;
    }
    if (!seed.empty()) overrides["seed"] = seed;
    if (!out.empty()) overrides["out"] = out;
    if (!streams.empty()) overrides["model.streams"] = streams;
    if (!window.empty()) overrides["samples.window"] = window;
    if (!corpus.empty()) overrides["corpus"] = corpus;
    if (!checkpoint.empty()) overrides["checkpoint"] = checkpoint;
    if (no_plots) overrides["plots"] = "false";
    if (!noise.empty()) overrides["noise"] = noise;

    return osca::cli::run(chosen, overrides,
                          config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config), std::cout,
                          std::cerr);
}
