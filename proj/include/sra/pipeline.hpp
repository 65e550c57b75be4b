#pragma once

#include <map>
#include <optional>
#include <string>

#include "sra/dsnet.hpp"
#include "sra/metrics.hpp"
#include "sra/yuv.hpp"

namespace sra {

enum class Scenario {
  S1_FilterDownFilterUp,
  S2_CnnDownFilterUp,
  S3_FilterDownCnnUp,
  S4_CnnDownCnnUp,
  AnchorNoSra,
};

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

// External codec driven through shell command templates. Placeholders:
// {input} {output} {bitstream} {qp} {width} {height} {bitdepth} {frames}
// {format}. Geometry placeholders describe the clip handed to the codec.
struct CodecAdapter {
  std::string encode_cmd;
  std::string decode_cmd;
  enum class BitrateSource { BitstreamSize, EncoderLogRegex };
  BitrateSource bitrate_source = BitrateSource::BitstreamSize;
  std::string log_regex;  // first capture group = kbps
  double fps = 60.0;      // duration basis for bitstream-size bitrates
};

struct VideoSpec {
  std::filesystem::path path;
  int width = 0;
  int height = 0;
  int bit_depth = 10;
  ChromaFormat format = ChromaFormat::YCbCr420;
  int frame_count = 1;
};

struct ScenarioConfig {
  Scenario scenario = Scenario::AnchorNoSra;
  std::vector<int> base_qps{27, 32, 37, 42};
  int qp_offset = -6;  // applied iff resolution adaptation is active
  std::filesystem::path weights_path;  // required for S2/S4
  DSNetConfig model;
  std::string upsampler_cmd;  // required for S3/S4; same placeholders as codec
  CodecAdapter codec;
  bool force_sra = true;
  std::map<int, bool> sra_table;  // per-QP override of force_sra
  std::filesystem::path run_dir;
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const;
};

struct QpResult {
  int base_qp = 0;
  int effective_qp = 0;
  bool sra_active = false;
  double bitrate_kbps = 0.0;
  double psnr_db = 0.0;
  StageTimes times;
};

struct RunResult {
  std::vector<QpResult> points;
  RDCurve curve() const;
  std::vector<StageTimes> stage_times() const;
};

// Per-QP resolution adaptation decision: table entry when present,
// force_sra otherwise; always false for the anchor scenario.
bool sra_decision(const ScenarioConfig& cfg, int base_qp);

// Full per-QP pipeline: (down-sample) -> encode -> decode -> (up-sample)
// -> luma PSNR vs the original, with stage wall-clock times. Artifacts,
// rd_curve.txt and manifest.json land under cfg.run_dir.
RunResult run_scenario(const VideoSpec& video, const ScenarioConfig& cfg);

struct CompareReport {
  double bd_rate_percent = 0.0;
  double enc_ratio = 0.0;
  double dec_ratio = 0.0;
};

CompareReport compare_scenarios(const RunResult& anchor, const RunResult& test);
CompareReport compare_run_dirs(const std::filesystem::path& anchor_dir,
                               const std::filesystem::path& test_dir);

// Loads the rd_curve.txt + manifest timings a run_scenario call wrote.
RunResult load_run_dir(const std::filesystem::path& run_dir);

struct CommandResult {
  int exit_code = 0;
  std::string output;  // stdout + stderr
};

// Runs a shell command, capturing combined output.
CommandResult run_command(const std::string& cmd);

// Pooled-MSE luminance PSNR over a frame sequence.
double psnr_luma_sequence(const std::vector<Frame>& ref, const std::vector<Frame>& test);

}  // namespace sra
