#include "sra/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "sra/resample.hpp"

namespace sra {

using nlohmann::json;

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::S1_FilterDownFilterUp: return "s1";
    case Scenario::S2_CnnDownFilterUp: return "s2";
    case Scenario::S3_FilterDownCnnUp: return "s3";
    case Scenario::S4_CnnDownCnnUp: return "s4";
    default: return "anchor";
  }
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "s1") return Scenario::S1_FilterDownFilterUp;
  if (s == "s2") return Scenario::S2_CnnDownFilterUp;
  if (s == "s3") return Scenario::S3_FilterDownCnnUp;
  if (s == "s4") return Scenario::S4_CnnDownCnnUp;
  if (s == "anchor" || s == "none") return Scenario::AnchorNoSra;
  throw ConfigError("unknown scenario: " + s);
}

void ScenarioConfig::validate() const {
  if (base_qps.empty()) throw ConfigError("at least one base QP is required");
  const bool cnn_down =
      scenario == Scenario::S2_CnnDownFilterUp || scenario == Scenario::S4_CnnDownCnnUp;
  const bool cnn_up =
      scenario == Scenario::S3_FilterDownCnnUp || scenario == Scenario::S4_CnnDownCnnUp;
  if (cnn_down && weights_path.empty())
    throw ConfigError("scenario " + to_string(scenario) + " needs a weights file");
  if (cnn_up && upsampler_cmd.empty())
    throw ConfigError("scenario " + to_string(scenario) + " needs an up-sampler command");
  if (codec.encode_cmd.empty() || codec.decode_cmd.empty())
    throw ConfigError("codec encode/decode command templates are required");
  if (codec.bitrate_source == CodecAdapter::BitrateSource::EncoderLogRegex &&
      codec.log_regex.empty())
    throw ConfigError("encoder-log bitrate extraction needs a regex");
  if (!(codec.fps > 0.0)) throw ConfigError("fps must be positive");
  if (run_dir.empty()) throw ConfigError("run_dir is required");
}

bool sra_decision(const ScenarioConfig& cfg, int base_qp) {
  if (cfg.scenario == Scenario::AnchorNoSra) return false;
  if (auto it = cfg.sra_table.find(base_qp); it != cfg.sra_table.end()) return it->second;
  return cfg.force_sra;
}

CommandResult run_command(const std::string& cmd) {
  CommandResult result;
  const std::string shell_cmd = cmd + " 2>&1";
  FILE* pipe = popen(shell_cmd.c_str(), "r");
  if (!pipe) throw SubprocessError("cannot spawn command: " + cmd);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) result.output.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = status < 0 ? status : WEXITSTATUS(status);
  return result;
}

double psnr_luma_sequence(const std::vector<Frame>& ref, const std::vector<Frame>& test) {
  if (ref.empty() || ref.size() != test.size())
    throw InputError("psnr needs matching, nonempty frame sequences");
  double se = 0.0;
  double n = 0.0;
  for (std::size_t f = 0; f < ref.size(); ++f) {
    if (ref[f].width != test[f].width || ref[f].height != test[f].height ||
        ref[f].bit_depth != test[f].bit_depth)
      throw DimensionError("psnr requires identical geometry and bit depth");
    for (std::size_t i = 0; i < ref[f].y.size(); ++i) {
      const double d =
          static_cast<double>(ref[f].y.data[i]) - static_cast<double>(test[f].y.data[i]);
      se += d * d;
    }
    n += static_cast<double>(ref[f].y.size());
  }
  if (se == 0.0) return kLosslessPsnr;
  const double maxv = static_cast<double>(ref[0].max_value());
  return 10.0 * std::log10(maxv * maxv / (se / n));
}

RDCurve RunResult::curve() const {
  RDCurve c;
  for (const QpResult& p : points) c.points.push_back({p.bitrate_kbps, p.psnr_db});
  c.validate();
  return c;
}

std::vector<StageTimes> RunResult::stage_times() const {
  std::vector<StageTimes> t;
  for (const QpResult& p : points) t.push_back(p.times);
  return t;
}

namespace {

void replace_all(std::string& s, const std::string& key, const std::string& value) {
  for (std::size_t pos = 0; (pos = s.find(key, pos)) != std::string::npos; pos += value.size())
    s.replace(pos, key.size(), value);
}

std::string fill_template(const std::string& tmpl, const std::filesystem::path& input,
                          const std::filesystem::path& output,
                          const std::filesystem::path& bitstream, int qp, int width, int height,
                          int bit_depth, int frames, ChromaFormat format) {
  std::string cmd = tmpl;
  replace_all(cmd, "{input}", input.string());
  replace_all(cmd, "{output}", output.string());
  replace_all(cmd, "{bitstream}", bitstream.string());
  replace_all(cmd, "{qp}", std::to_string(qp));
  replace_all(cmd, "{width}", std::to_string(width));
  replace_all(cmd, "{height}", std::to_string(height));
  replace_all(cmd, "{bitdepth}", std::to_string(bit_depth));
  replace_all(cmd, "{frames}", std::to_string(frames));
  replace_all(cmd, "{format}", to_string(format));
  return cmd;
}

void run_checked(const std::string& cmd, const std::string& what,
                 const std::filesystem::path& log_path, std::string* captured) {
  const CommandResult r = run_command(cmd);
  if (captured) *captured = r.output;
  std::ofstream log(log_path, std::ios::app);
  log << "$ " << cmd << "\n" << r.output << "\n";
  if (r.exit_code != 0)
    throw SubprocessError(what + " command failed (exit " + std::to_string(r.exit_code) + "): " +
                          cmd + "\n" + r.output);
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json times_to_json(const StageTimes& t) {
  return json{{"downsample", t.downsample},
              {"inference", t.inference},
              {"encode", t.encode},
              {"decode", t.decode},
              {"upsample", t.upsample}};
}

StageTimes times_from_json(const json& j) {
  StageTimes t;
  t.downsample = j.value("downsample", 0.0);
  t.inference = j.value("inference", 0.0);
  t.encode = j.value("encode", 0.0);
  t.decode = j.value("decode", 0.0);
  t.upsample = j.value("upsample", 0.0);
  return t;
}

std::string format_psnr(double v) {
  if (is_lossless_psnr(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

}  // namespace

RunResult run_scenario(const VideoSpec& video, const ScenarioConfig& cfg) {
  cfg.validate();
  const std::vector<Frame> original = read_yuv(video.path, video.width, video.height,
                                               video.bit_depth, video.format, video.frame_count);
  std::filesystem::create_directories(cfg.run_dir);

  const bool cnn_down =
      cfg.scenario == Scenario::S2_CnnDownFilterUp || cfg.scenario == Scenario::S4_CnnDownCnnUp;
  const bool cnn_up =
      cfg.scenario == Scenario::S3_FilterDownCnnUp || cfg.scenario == Scenario::S4_CnnDownCnnUp;
  ModelWeights weights;
  if (cnn_down) weights = load_weights(cfg.weights_path, cfg.model);

  RunResult result;
  for (const int base_qp : cfg.base_qps) {
    const bool active = sra_decision(cfg, base_qp);
    const int eff_qp = active ? base_qp + cfg.qp_offset : base_qp;
    const std::filesystem::path qp_dir = cfg.run_dir / ("qp" + std::to_string(base_qp));
    std::filesystem::create_directories(qp_dir);
    const std::filesystem::path log_path = qp_dir / "commands.log";
    std::filesystem::remove(log_path);

    QpResult qr;
    qr.base_qp = base_qp;
    qr.effective_qp = eff_qp;
    qr.sra_active = active;

    // 1. resolution adaptation before encoding
    std::vector<Frame> to_encode;
    if (!active) {
      to_encode = original;
    } else if (cnn_down) {
      const auto t0 = std::chrono::steady_clock::now();
      for (const Frame& f : original)
        to_encode.push_back(dsnet_downsample_frame(f, weights, cfg.model, cfg.threads));
      qr.times.inference = elapsed_since(t0);
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      for (const Frame& f : original)
        to_encode.push_back(resample_frame(f, ResampleDirection::Down, FilterKind::Lanczos3));
      qr.times.downsample = elapsed_since(t0);
    }
    const int enc_w = to_encode[0].width;
    const int enc_h = to_encode[0].height;
    const std::filesystem::path enc_in = qp_dir / "to_encode.yuv";
    write_yuv(enc_in, to_encode);

    // 2. external codec round trip
    const std::filesystem::path bitstream = qp_dir / "bitstream.bin";
    const std::filesystem::path dec_out = qp_dir / "decoded.yuv";
    std::string encoder_output;
    {
      const std::string cmd =
          fill_template(cfg.codec.encode_cmd, enc_in, dec_out, bitstream, eff_qp, enc_w, enc_h,
                        video.bit_depth, video.frame_count, video.format);
      const auto t0 = std::chrono::steady_clock::now();
      run_checked(cmd, "encode", log_path, &encoder_output);
      qr.times.encode = elapsed_since(t0);
    }
    {
      const std::string cmd =
          fill_template(cfg.codec.decode_cmd, enc_in, dec_out, bitstream, eff_qp, enc_w, enc_h,
                        video.bit_depth, video.frame_count, video.format);
      const auto t0 = std::chrono::steady_clock::now();
      run_checked(cmd, "decode", log_path, nullptr);
      qr.times.decode = elapsed_since(t0);
    }
    std::vector<Frame> decoded;
    try {
      decoded = read_yuv(dec_out, enc_w, enc_h, video.bit_depth, video.format, video.frame_count);
    } catch (const Error& e) {
      throw SubprocessError("decoded clip is unreadable: " + std::string(e.what()));
    }

    // 3. resolution restoration after decoding
    std::vector<Frame> reconstructed;
    if (!active) {
      reconstructed = std::move(decoded);
    } else if (cnn_up) {
      const std::filesystem::path up_out = qp_dir / "upsampled.yuv";
      const std::string cmd = fill_template(cfg.upsampler_cmd, dec_out, up_out, bitstream, eff_qp,
                                            enc_w, enc_h, video.bit_depth, video.frame_count,
                                            video.format);
      const auto t0 = std::chrono::steady_clock::now();
      run_checked(cmd, "up-sampler", log_path, nullptr);
      qr.times.upsample = elapsed_since(t0);
      reconstructed = read_yuv(up_out, video.width, video.height, video.bit_depth, video.format,
                               video.frame_count);
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      for (const Frame& f : decoded)
        reconstructed.push_back(resample_frame(f, ResampleDirection::Up, FilterKind::Lanczos3));
      qr.times.upsample = elapsed_since(t0);
      write_yuv(qp_dir / "upsampled.yuv", reconstructed);
    }
    if (reconstructed[0].width != video.width || reconstructed[0].height != video.height)
      throw Error("reconstructed geometry does not match the source");

    // 4. quality and rate
    qr.psnr_db = psnr_luma_sequence(original, reconstructed);
    if (cfg.codec.bitrate_source == CodecAdapter::BitrateSource::BitstreamSize) {
      const auto bytes = std::filesystem::file_size(bitstream);
      const double seconds = static_cast<double>(video.frame_count) / cfg.codec.fps;
      qr.bitrate_kbps = static_cast<double>(bytes) * 8.0 / 1000.0 / seconds;
    } else {
      std::smatch m;
      if (!std::regex_search(encoder_output, m, std::regex(cfg.codec.log_regex)) || m.size() < 2)
        throw SubprocessError("bitrate regex found no match in encoder output");
      qr.bitrate_kbps = std::stod(m[1].str());
    }
    result.points.push_back(std::move(qr));
  }

  // Report artifacts. rd_curve.txt stays byte-stable across reruns;
  // wall-clock timings live only in the manifest.
  {
    std::ofstream rd(cfg.run_dir / "rd_curve.txt", std::ios::trunc);
    for (const QpResult& p : result.points) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%d %.6f %s\n", p.base_qp, p.bitrate_kbps,
                    format_psnr(p.psnr_db).c_str());
      rd << buf;
    }
  }
  {
    json cfg_j{{"scenario", to_string(cfg.scenario)},
               {"base_qps", cfg.base_qps},
               {"qp_offset", cfg.qp_offset},
               {"force_sra", cfg.force_sra},
               {"weights", cfg.weights_path.string()},
               {"encode_cmd", cfg.codec.encode_cmd},
               {"decode_cmd", cfg.codec.decode_cmd},
               {"fps", cfg.codec.fps},
               {"seed", cfg.seed}};
    json manifest{{"input",
                   {{"path", video.path.string()},
                    {"width", video.width},
                    {"height", video.height},
                    {"bit_depth", video.bit_depth},
                    {"format", to_string(video.format)},
                    {"frames", video.frame_count}}},
                  {"config", cfg_j},
                  {"config_hash", fnv1a64(cfg_j.dump())}};
    json per_qp = json::array();
    for (const QpResult& p : result.points) {
      json pj{{"base_qp", p.base_qp},
              {"effective_qp", p.effective_qp},
              {"sra_active", p.sra_active},
              {"bitrate_kbps", p.bitrate_kbps},
              {"times", times_to_json(p.times)}};
      if (is_lossless_psnr(p.psnr_db))
        pj["psnr_db"] = nullptr;
      else
        pj["psnr_db"] = p.psnr_db;
      per_qp.push_back(std::move(pj));
    }
    manifest["per_qp"] = std::move(per_qp);
    std::ofstream mf(cfg.run_dir / "manifest.json", std::ios::trunc);
    mf << manifest.dump(2) << "\n";
  }
  return result;
}

CompareReport compare_scenarios(const RunResult& anchor, const RunResult& test) {
  if (anchor.points.size() != test.points.size() || anchor.points.empty())
    throw InputError("compare needs runs over the same QP set");
  CompareReport r;
  r.bd_rate_percent = bd_rate(anchor.curve(), test.curve());
  const TimingReport t = timing_report(anchor.stage_times(), test.stage_times());
  r.enc_ratio = t.enc_ratio;
  r.dec_ratio = t.dec_ratio;
  return r;
}

RunResult load_run_dir(const std::filesystem::path& run_dir) {
  RunResult result;
  std::ifstream rd(run_dir / "rd_curve.txt");
  if (!rd) throw InputError("missing rd_curve.txt in " + run_dir.string());
  std::string line;
  while (std::getline(rd, line)) {
    if (line.empty()) continue;
    QpResult p;
    std::istringstream ss(line);
    std::string psnr_text;
    if (!(ss >> p.base_qp >> p.bitrate_kbps >> psnr_text))
      throw FormatError("bad rd_curve.txt line: " + line);
    p.psnr_db = psnr_text == "inf" ? kLosslessPsnr : std::stod(psnr_text);
    result.points.push_back(p);
  }
  std::ifstream mf(run_dir / "manifest.json");
  if (!mf) throw InputError("missing manifest.json in " + run_dir.string());
  json manifest = json::parse(mf);
  const json& per_qp = manifest.at("per_qp");
  if (per_qp.size() != result.points.size())
    throw FormatError("manifest and rd_curve.txt disagree in " + run_dir.string());
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    result.points[i].effective_qp = per_qp[i].value("effective_qp", result.points[i].base_qp);
    result.points[i].sra_active = per_qp[i].value("sra_active", false);
    result.points[i].times = times_from_json(per_qp[i].at("times"));
  }
  return result;
}

CompareReport compare_run_dirs(const std::filesystem::path& anchor_dir,
                               const std::filesystem::path& test_dir) {
  return compare_scenarios(load_run_dir(anchor_dir), load_run_dir(test_dir));
}

}  // namespace sra
