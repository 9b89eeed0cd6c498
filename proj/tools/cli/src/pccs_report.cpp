#include <algorithm>
#include <cmath>
#include <sstream>

#include "commands.hpp"
#include "sflow/featurestats/audio.hpp"
#include "sflow/featurestats/pccs.hpp"
#include "sflow/featurestats/spectral.hpp"
#include "sflow/numkit/svg.hpp"

namespace sflow::cli {

namespace fs = featurestats;

nlohmann::json pccs_defaults() {
  return {{"inputs", nlohmann::json::array()},
          {"preset", "analyzer"},
          {"feature", "mel"},
          {"log_mel", false},
          {"bins", std::size_t{50}},
          {"sample_rate", 16000.0},
          {"trim_db", -40.0},
          {"trim_ms", 25.0},
          {"format", "auto"}};
}

namespace {

bool is_wav(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

fs::FeatureMatrix load_input(const std::filesystem::path& path, const Settings& s) {
  const std::string format = s.text("format");
  if (format == "auto" ? is_wav(path) : format == "wav") {
    const fs::Audio audio = fs::load_wav(path);
    const double rate = s.real("sample_rate");
    auto x = fs::resample(audio.samples, audio.sample_rate, rate);
    x = fs::trim_silence(x, s.real("trim_db"), static_cast<std::size_t>(std::llround(s.real("trim_ms") * rate / 1000.0)));
    const auto feats = fs::extract(x, rate, fs::preset(s.text("preset")), s.flag("log_mel"));
    return s.text("feature") == "linear" ? feats.linear : feats.mel;
  }
  const auto mf = format == "auto" ? fs::format_for_path(path) : fs::parse_matrix_format(format);
  return fs::import_matrix(path, mf);
}

std::string safe_stem(const std::filesystem::path& p) {
  std::string stem = p.stem().string();
  for (char& c : stem)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return stem.empty() ? "input" : stem;
}

}  // namespace

int run_pccs_report(const Settings& s, RunDir& dir, std::ostream& log, std::ostream& err) {
  auto inputs = s.texts("inputs");
  if (inputs.empty()) throw UsageError("pccs needs at least one input file");
  const std::string feature = s.text("feature"), format = s.text("format");
  if (feature != "mel" && feature != "linear") throw UsageError("feature must be mel or linear");
  if (format != "auto" && format != "wav" && format != "csv" && format != "raw") {
    throw UsageError("format must be auto, wav, csv or raw");
  }
  fs::preset(s.text("preset"));  // validates the name up front
  const std::size_t bins = s.size("bins");
  if (bins == 0) throw UsageError("bins must be positive");
  std::sort(inputs.begin(), inputs.end());

  nlohmann::json reports = nlohmann::json::array(), failures = nlohmann::json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::filesystem::path path = inputs[i];
    fs::FeatureMatrix m;
    try {
      m = load_input(path, s);
    } catch (const std::exception& e) {
      err << "cannot analyse '" << inputs[i] << "': " << e.what() << '\n';
      failures.push_back({{"path", inputs[i]}, {"error", e.what()}});
      continue;
    }
    std::ostringstream tag;
    tag << (i < 10 ? "0" : "") << i << '_' << safe_stem(path);
    nlohmann::json entry = {{"path", inputs[i]},
                            {"source", fs::to_string(m.source)},
                            {"frames", m.frames()},
                            {"channels", m.channels()}};
    for (auto axis : {fs::Axis::kTime, fs::Axis::kChannel}) {
      const std::string name = tag.str() + "_" + fs::to_string(axis);
      const std::size_t count = axis == fs::Axis::kTime ? m.frames() : m.channels();
      if (count < 2) {
        entry["reports"][fs::to_string(axis)] = {{"error", "fewer than 2 vectors"}};
        continue;
      }
      const auto rep = fs::pccs_av(m, axis, bins);
      std::ostringstream csv;
      fs::write_cors_csv(csv, rep);
      dir.write_text("reports/" + name + ".csv", csv.str());
      dir.write_text("reports/" + name + ".svg",
                     numkit::svg::histogram_plot({path.filename().string() + ": PCCs-AV, " + fs::to_string(axis) +
                                                      " axis",
                                                  "|Cor|", "pairs"},
                                                 rep.histogram.edges, rep.histogram.counts));
      entry["reports"][fs::to_string(axis)] = fs::summary_json(rep);
      log << inputs[i] << " [" << fs::to_string(axis) << "] median " << rep.median() << ", strong "
          << rep.bands.strong << ", skipped " << rep.skipped << '\n';
    }
    reports.push_back(std::move(entry));
  }
  dir.write_json("summary.json", {{"inputs", reports}, {"failures", failures}});
  return failures.empty() ? 0 : 2;
}

}  // namespace sflow::cli
