#include "sflow/cli/app.hpp"

#include <CLI11.hpp>

#include <functional>
#include <map>
#include <memory>

#include "commands.hpp"
#include "sflow/numkit/array.hpp"

namespace sflow::cli {

namespace {

struct Binding {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

using Runner = std::function<int(const Settings&, RunDir&, std::ostream&, std::ostream&)>;

struct Command {
  CLI::App* app = nullptr;
  nlohmann::json defaults;
  Runner runner;
  std::string out;
  std::string config;
  std::vector<std::string> positionals;
  std::vector<std::string> sets;
  std::vector<std::unique_ptr<Binding>> bindings;

  Command& bind(const std::string& flag, const std::string& key, const std::string& help) {
    auto b = std::make_unique<Binding>();
    b->key = key;
    b->option = app->add_option(flag, b->value, help);
    bindings.push_back(std::move(b));
    return *this;
  }
  Command& choice(const std::string& flag, const std::string& key, const std::string& help,
                  const std::vector<std::string>& allowed) {
    bind(flag, key, help);
    bindings.back()->option->check(CLI::IsMember(allowed));
    return *this;
  }
};

Command& add_command(std::vector<std::unique_ptr<Command>>& all, CLI::App* app, nlohmann::json defaults,
                     Runner runner) {
  auto c = std::make_unique<Command>();
  c->app = app;
  c->defaults = std::move(defaults);
  c->runner = std::move(runner);
  app->add_option("--out", c->out, "Output directory (created if missing)")->required();
  app->add_option("--config", c->config, "JSON config file; flags override its values");
  app->add_option("--set", c->sets, "Override any config key, key=value (repeatable)");
  all.push_back(std::move(c));
  return *all.back();
}

int execute(Command& c, std::ostream& out, std::ostream& err) {
  Settings settings(c.defaults);
  try {
    if (!c.config.empty()) settings.merge_file(c.config);
    if (!c.positionals.empty()) settings.merge({{"inputs", c.positionals}}, "command line");
    for (const auto& kv : c.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + kv + "'");
      settings.set_text(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& b : c.bindings)
      if (b->option->count() > 0) settings.set_text(b->key, b->value);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    RunDir dir(c.out);
    dir.write_json("config.json", settings.resolved());
    const int code = c.runner(settings, dir, out, err);
    dir.write_manifest();
    return code;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const numkit::NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Straight-flow experiments: coupling lab, toy voice-clone pipeline and PCCs-AV reports", "straightflow"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Command>> commands;

  auto wrap = [](auto fn) {
    return [fn](const Settings& s, RunDir& d, std::ostream& o, std::ostream&) { return fn(s, d, o); };
  };

  add_command(commands, app.add_subcommand("coupling-lab", "Repetitive vs independent coupling experiment in 2D"),
              coupling_lab_defaults(), wrap(run_coupling_lab))
      .bind("--seed", "seed", "Random seed")
      .choice("--coupling", "coupling", "Which coupling(s) to train", {"repetitive", "independent", "both"})
      .bind("--nfe", "nfe", "Comma separated NFE values for the drift table")
      .bind("--steps", "steps", "Training steps per field");

  auto& pccs = add_command(commands, app.add_subcommand("pccs", "PCCs-AV reports for WAV files or feature matrices"),
                           pccs_defaults(), run_pccs_report);
  pccs.choice("--preset", "preset", "Spectrogram preset", {"analyzer", "acoustic"})
      .choice("--feature", "feature", "Feature analysed for WAV inputs", {"mel", "linear"})
      .choice("--log-mel", "log_mel", "Log-compress mel features", {"on", "off"})
      .bind("--bins", "bins", "Histogram bins on [0, 1]");
  pccs.app->add_option("inputs", pccs.positionals, "WAV, CSV or raw matrix files");

  CLI::App* toy = app.add_subcommand("toyclone", "Toy three-stage voice-clone pipeline");
  toy->require_subcommand(1);
  add_command(commands, toy->add_subcommand("train", "Train one model and write a checkpoint"),
              toyclone_train_defaults(), wrap(run_toyclone_train))
      .bind("--seed", "seed", "Training seed")
      .choice("--version", "version", "Detail network version", {"v1", "v2"})
      .bind("--steps", "steps", "Training steps")
      .choice("--ablation", "ablation", "Model configuration", {"F1+F2+M", "F1+F2", "F2", "F1", "noise-init"})
      .bind("--corpus", "corpus", "Training corpus (JSON lines); default is the bundled synthetic corpus")
      .choice("--noise-at-inference", "noise_at_inference", "Add noise to F2 when solving", {"on", "off"});
  add_command(commands, toy->add_subcommand("infer", "Generate masked frames of held-out utterances"),
              toyclone_infer_defaults(), wrap(run_toyclone_infer))
      .bind("--checkpoint", "checkpoint", "Checkpoint written by 'toyclone train'")
      .bind("--seed", "seed", "Mask and noise seed")
      .bind("--nfe", "nfe", "Comma separated Euler step counts")
      .bind("--utterances", "utterances", "Number of held-out utterances")
      .choice("--noise-at-inference", "noise_at_inference", "Add noise to F2 when solving", {"on", "off"});
  add_command(commands, toy->add_subcommand("ablate", "Train and score each model configuration"),
              toyclone_ablate_defaults(), wrap(run_toyclone_ablate))
      .bind("--seed", "seed", "Training seed (shared by every configuration)")
      .choice("--version", "version", "Detail network version", {"v1", "v2"})
      .bind("--steps", "steps", "Training steps")
      .bind("--nfe", "nfe", "Evaluation NFE (one value)")
      .bind("--configs", "configs", "Comma separated configurations")
      .bind("--repeats", "repeats", "Training seeds averaged per configuration")
      .choice("--noise-at-inference", "noise_at_inference", "Add noise to F2 when solving", {"on", "off"});
  add_command(commands, toy->add_subcommand("nfe-sweep", "Held-out error and straightness against NFE"),
              toyclone_sweep_defaults(), wrap(run_toyclone_sweep))
      .bind("--checkpoint", "checkpoint", "Checkpoint to sweep; default trains coarse-init and noise-init models")
      .bind("--seed", "seed", "Mask and noise seed")
      .bind("--nfe", "nfe", "Comma separated Euler step counts")
      .choice("--version", "version", "Detail network version", {"v1", "v2"})
      .bind("--steps", "steps", "Training steps when no checkpoint is given")
      .choice("--noise-at-inference", "noise_at_inference", "Add noise to F2 when solving", {"on", "off"});
  add_command(commands, toy->add_subcommand("corpus", "Export the bundled synthetic corpus as JSON lines"),
              toyclone_corpus_defaults(), wrap(run_toyclone_corpus))
      .bind("--seed", "seed", "Corpus seed");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  for (auto& c : commands)
    if (c->app->parsed()) return execute(*c, out, err);
  err << "no command given\n";
  return kUsage;
}

}  // namespace sflow::cli
