#pragma once

#include <ostream>

#include <nlohmann/json.hpp>

#include "sflow/cli/run_dir.hpp"
#include "sflow/cli/settings.hpp"

namespace sflow::cli {

// Each command returns an exit code; exceptions other than UsageError map to exit 2.

nlohmann::json coupling_lab_defaults();
int run_coupling_lab(const Settings& s, RunDir& dir, std::ostream& log);

nlohmann::json pccs_defaults();
int run_pccs_report(const Settings& s, RunDir& dir, std::ostream& log, std::ostream& err);

nlohmann::json toyclone_train_defaults();
int run_toyclone_train(const Settings& s, RunDir& dir, std::ostream& log);

nlohmann::json toyclone_infer_defaults();
int run_toyclone_infer(const Settings& s, RunDir& dir, std::ostream& log);

nlohmann::json toyclone_ablate_defaults();
int run_toyclone_ablate(const Settings& s, RunDir& dir, std::ostream& log);

nlohmann::json toyclone_sweep_defaults();
int run_toyclone_sweep(const Settings& s, RunDir& dir, std::ostream& log);

nlohmann::json toyclone_corpus_defaults();
int run_toyclone_corpus(const Settings& s, RunDir& dir, std::ostream& log);

}  // namespace sflow::cli
