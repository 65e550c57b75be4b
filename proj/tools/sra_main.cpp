// Command line front end: resolution adaptation pipeline, resampling,
// CNN inference/training, metrics and RD comparison utilities.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "sra/metrics.hpp"
#include "sra/pipeline.hpp"
#include "sra/resample.hpp"
#include "sra/synthetic.hpp"
#include "sra/tiling.hpp"
#include "sra/toycodec.hpp"
#include "sra/training.hpp"

namespace {

using namespace sra;

struct GeometryArgs {
  int width = 0;
  int height = 0;
  int bit_depth = 10;
  std::string format = "yuv420";
  int frames = 1;

  void attach(CLI::App* cmd, bool need_frames = true) {
    cmd->add_option("--width", width, "frame width")->required();
    cmd->add_option("--height", height, "frame height")->required();
    cmd->add_option("--bitdepth", bit_depth, "8 or 10")->default_val(10);
    cmd->add_option("--format", format, "yuv420 or yuv444")->default_val("yuv420");
    if (need_frames) cmd->add_option("--frames", frames, "frame count")->default_val(1);
  }
  ChromaFormat chroma() const { return chroma_format_from_string(format); }
};

struct ModelArgs {
  int num_rdb = 14;
  int base_channels = 64;
  int rdb_layers = 5;
  int rdb_growth = 32;
  double lrelu_slope = 0.2;

  void attach(CLI::App* cmd) {
    cmd->add_option("--rdb", num_rdb, "residual dense block count")->default_val(14);
    cmd->add_option("--base-channels", base_channels)->default_val(64);
    cmd->add_option("--rdb-layers", rdb_layers)->default_val(5);
    cmd->add_option("--rdb-growth", rdb_growth)->default_val(32);
    cmd->add_option("--lrelu-slope", lrelu_slope)->default_val(0.2);
  }
  DSNetConfig config() const { return {num_rdb, base_channels, rdb_layers, rdb_growth, lrelu_slope}; }
};

DSNetConfig model_from_json(const nlohmann::json& j) {
  DSNetConfig cfg;
  cfg.num_rdb = j.value("num_rdb", cfg.num_rdb);
  cfg.base_channels = j.value("base_channels", cfg.base_channels);
  cfg.rdb_layers = j.value("rdb_layers", cfg.rdb_layers);
  cfg.rdb_growth = j.value("rdb_growth", cfg.rdb_growth);
  cfg.lrelu_slope = j.value("lrelu_slope", cfg.lrelu_slope);
  return cfg;
}

int run_pipeline_config(const std::filesystem::path& config_path, std::uint64_t seed_override,
                        bool has_seed_override) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config: " + config_path.string());
  nlohmann::json j = nlohmann::json::parse(in);

  VideoSpec video;
  const auto& ji = j.at("input");
  video.path = ji.at("path").get<std::string>();
  video.width = ji.at("width").get<int>();
  video.height = ji.at("height").get<int>();
  video.bit_depth = ji.value("bit_depth", 10);
  video.format = chroma_format_from_string(ji.value("format", "yuv420"));
  video.frame_count = ji.value("frames", 1);

  ScenarioConfig cfg;
  cfg.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  if (j.contains("base_qps")) cfg.base_qps = j["base_qps"].get<std::vector<int>>();
  cfg.qp_offset = j.value("qp_offset", -6);
  cfg.weights_path = j.value("weights", std::string());
  if (j.contains("model")) cfg.model = model_from_json(j["model"]);
  cfg.upsampler_cmd = j.value("upsampler_cmd", std::string());
  const auto& jc = j.at("codec");
  cfg.codec.encode_cmd = jc.at("encode_cmd").get<std::string>();
  cfg.codec.decode_cmd = jc.at("decode_cmd").get<std::string>();
  const std::string src = jc.value("bitrate_source", "bitstream_size");
  if (src == "bitstream_size") {
    cfg.codec.bitrate_source = CodecAdapter::BitrateSource::BitstreamSize;
  } else if (src == "encoder_log_regex") {
    cfg.codec.bitrate_source = CodecAdapter::BitrateSource::EncoderLogRegex;
  } else {
    throw ConfigError("unknown bitrate_source: " + src);
  }
  cfg.codec.log_regex = jc.value("log_regex", std::string());
  cfg.codec.fps = jc.value("fps", 60.0);
  cfg.force_sra = j.value("force_sra", true);
  if (j.contains("sra_table"))
    for (const auto& [qp, on] : j["sra_table"].items())
      cfg.sra_table[std::stoi(qp)] = on.get<bool>();
  cfg.run_dir = j.at("run_dir").get<std::string>();
  cfg.seed = j.value("seed", 0u);
  if (has_seed_override) cfg.seed = seed_override;
  cfg.threads = j.value("threads", 0);

  const RunResult result = run_scenario(video, cfg);
  for (const QpResult& p : result.points)
    std::printf("qp %d (effective %d) bitrate_kbps %.6f psnr_db %s\n", p.base_qp, p.effective_qp,
                p.bitrate_kbps,
                is_lossless_psnr(p.psnr_db) ? "lossless" : std::to_string(p.psnr_db).c_str());
  std::printf("run_dir %s\n", cfg.run_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial resolution adaptation toolkit"};
  app.require_subcommand(1);
  std::uint64_t global_seed = 0;
  const auto* seed_opt = app.add_option("--seed", global_seed, "seed for all randomized steps");

  // --- resample ---------------------------------------------------------
  auto* c_resample = app.add_subcommand("resample", "filter-based 2x down/up-sampling of a clip");
  std::string rs_in, rs_out, rs_dir = "down", rs_filter = "lanczos3";
  GeometryArgs rs_geo;
  c_resample->add_option("--input", rs_in)->required();
  c_resample->add_option("--output", rs_out)->required();
  rs_geo.attach(c_resample);
  c_resample->add_option("--direction", rs_dir, "down or up")->default_val("down");
  c_resample->add_option("--filter", rs_filter, "lanczos3, bicubic or bilinear")
      ->default_val("lanczos3");

  // --- infer ------------------------------------------------------------
  auto* c_infer = app.add_subcommand("infer", "CNN 2x down-sampling of a clip (tiled)");
  std::string in_in, in_out, in_weights;
  GeometryArgs in_geo;
  ModelArgs in_model;
  int in_threads = 0;
  c_infer->add_option("--input", in_in)->required();
  c_infer->add_option("--output", in_out)->required();
  c_infer->add_option("--weights", in_weights)->required();
  in_geo.attach(c_infer);
  in_model.attach(c_infer);
  c_infer->add_option("--threads", in_threads)->default_val(0);

  // --- train ------------------------------------------------------------
  auto* c_train = app.add_subcommand("train", "train the down-sampling CNN on extracted blocks");
  std::string tr_in, tr_out = "weights.dsnw", tr_optim, tr_log;
  GeometryArgs tr_geo;
  ModelArgs tr_model;
  int tr_blocks = 64, tr_synthetic = 0;
  TrainConfig tr_cfg;
  int tr_threads = 0;
  c_train->add_option("--input", tr_in, "source clip for training blocks");
  c_train->add_option("--synthetic", tr_synthetic,
                      "generate this many synthetic source frames instead of --input");
  tr_geo.attach(c_train);
  tr_model.attach(c_train);
  c_train->add_option("--blocks", tr_blocks, "number of 96x96 blocks to extract")->default_val(64);
  c_train->add_option("--epochs", tr_cfg.epochs)->default_val(200);
  c_train->add_option("--batch", tr_cfg.batch_size)->default_val(16);
  c_train->add_option("--lr", tr_cfg.learning_rate)->default_val(1e-4);
  c_train->add_option("--lambda", tr_cfg.lambda_dsnet)->default_val(30.0);
  c_train->add_option("--omega", tr_cfg.omega)->default_val(1.0 / 6.0);
  c_train->add_option("--l2", tr_cfg.l2)->default_val(0.0);
  c_train->add_option("--out", tr_out)->default_val("weights.dsnw");
  c_train->add_option("--optim-out", tr_optim, "optimizer sidecar path");
  c_train->add_option("--log", tr_log, "per-epoch loss trajectory CSV");
  c_train->add_option("--threads", tr_threads)->default_val(0);

  // --- metrics ----------------------------------------------------------
  auto* c_metrics = app.add_subcommand("metrics", "quality metrics between two clips");
  std::string mt_ref, mt_test, mt_which = "psnr";
  GeometryArgs mt_geo;
  int mt_scales = 5;
  c_metrics->add_option("--ref", mt_ref)->required();
  c_metrics->add_option("--test", mt_test)->required();
  mt_geo.attach(c_metrics);
  c_metrics->add_option("--metric", mt_which, "psnr, msssim or all")->default_val("psnr");
  c_metrics->add_option("--scales", mt_scales, "ms-ssim scale count")->default_val(5);

  // --- bdrate -----------------------------------------------------------
  auto* c_bdrate = app.add_subcommand("bdrate", "BD-rate between two 4-line 'bitrate psnr' files");
  std::string bd_anchor, bd_test;
  c_bdrate->add_option("anchor", bd_anchor)->required();
  c_bdrate->add_option("test", bd_test)->required();

  // --- pipeline ---------------------------------------------------------
  auto* c_pipe = app.add_subcommand("pipeline", "end-to-end scenario runs and comparisons");
  c_pipe->require_subcommand(1);
  auto* c_pipe_run = c_pipe->add_subcommand("run", "run one scenario from a JSON config");
  std::string pipe_cfg;
  c_pipe_run->add_option("--config", pipe_cfg, "JSON run configuration")->required();
  auto* c_pipe_cmp = c_pipe->add_subcommand("compare", "BD-rate + timing ratios of two run dirs");
  std::string cmp_anchor, cmp_test;
  c_pipe_cmp->add_option("anchor_dir", cmp_anchor)->required();
  c_pipe_cmp->add_option("test_dir", cmp_test)->required();

  // --- weights ----------------------------------------------------------
  auto* c_weights = app.add_subcommand("weights", "weight file utilities");
  c_weights->require_subcommand(1);
  auto* c_w_inspect = c_weights->add_subcommand("inspect", "list layers and parameter counts");
  std::string wi_path;
  ModelArgs wi_model;
  c_w_inspect->add_option("file", wi_path)->required();
  wi_model.attach(c_w_inspect);
  auto* c_w_init = c_weights->add_subcommand("init", "write a fresh weight file");
  std::string w_init_out;
  bool w_init_zero = false;
  ModelArgs w_init_model;
  c_w_init->add_option("--out", w_init_out)->required();
  c_w_init->add_flag("--zero", w_init_zero, "all-zero weights instead of random init");
  w_init_model.attach(c_w_init);

  // --- toycodec ---------------------------------------------------------
  auto* c_toy = app.add_subcommand("toycodec", "built-in lossy codec for pipeline testing");
  c_toy->require_subcommand(1);
  auto* c_toy_enc = c_toy->add_subcommand("encode");
  std::string te_in, te_bs;
  GeometryArgs te_geo;
  int te_qp = 32;
  c_toy_enc->add_option("--input", te_in)->required();
  c_toy_enc->add_option("--bitstream", te_bs)->required();
  te_geo.attach(c_toy_enc);
  c_toy_enc->add_option("--qp", te_qp)->required();
  auto* c_toy_dec = c_toy->add_subcommand("decode");
  std::string td_bs, td_out;
  c_toy_dec->add_option("--bitstream", td_bs)->required();
  c_toy_dec->add_option("--output", td_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_resample) {
      const auto frames = read_yuv(rs_in, rs_geo.width, rs_geo.height, rs_geo.bit_depth,
                                   rs_geo.chroma(), rs_geo.frames);
      std::vector<Frame> out;
      const auto dir = rs_dir == "down" ? ResampleDirection::Down : ResampleDirection::Up;
      if (rs_dir != "down" && rs_dir != "up") throw InputError("direction must be down or up");
      for (const Frame& f : frames)
        out.push_back(resample_frame(f, dir, filter_kind_from_string(rs_filter)));
      write_yuv(rs_out, out);
    } else if (*c_infer) {
      const DSNetConfig model = in_model.config();
      const ModelWeights w = load_weights(in_weights, model);
      const auto frames = read_yuv(in_in, in_geo.width, in_geo.height, in_geo.bit_depth,
                                   in_geo.chroma(), in_geo.frames);
      std::vector<Frame> out;
      for (const Frame& f : frames) out.push_back(dsnet_downsample_frame(f, w, model, in_threads));
      write_yuv(in_out, out);
    } else if (*c_train) {
      if (*seed_opt) tr_cfg.seed = global_seed;
      std::vector<Frame> frames;
      if (tr_synthetic > 0) {
        frames = synthetic_video(tr_geo.width, tr_geo.height, tr_geo.bit_depth, tr_geo.chroma(),
                                 tr_synthetic, tr_cfg.seed);
      } else if (!tr_in.empty()) {
        frames = read_yuv(tr_in, tr_geo.width, tr_geo.height, tr_geo.bit_depth, tr_geo.chroma(),
                          tr_geo.frames);
      } else {
        throw ConfigError("train needs --input or --synthetic");
      }
      const auto blocks = extract_training_blocks(frames, 96, tr_blocks, tr_cfg.seed);
      const DSNetConfig model = tr_model.config();
      const TrainResult r = train(blocks, tr_cfg, model, nullptr, tr_threads);
      save_weights(r.weights, tr_out);
      if (!tr_optim.empty()) {
        // re-save with the optimizer sidecar for resumable checkpoints
        OptimizerState st = OptimizerState::make(r.weights);
        save_checkpoint(tr_out, tr_optim, r.weights, st);
      }
      if (!tr_log.empty()) {
        std::ofstream log(tr_log, std::ios::trunc);
        log << "epoch,distortion,rate_mse,rate_msssim,total\n";
        for (std::size_t e = 0; e < r.epoch_mean.size(); ++e) {
          const LossTerms& t = r.epoch_mean[e];
          log << e << "," << t.distortion << "," << t.rate_mse << "," << t.rate_msssim << ","
              << t.total << "\n";
        }
      }
      if (!r.epoch_mean.empty())
        std::printf("final_total_loss %.8f\n", r.epoch_mean.back().total);
      std::printf("weights %s\n", tr_out.c_str());
    } else if (*c_metrics) {
      const auto ref = read_yuv(mt_ref, mt_geo.width, mt_geo.height, mt_geo.bit_depth,
                                mt_geo.chroma(), mt_geo.frames);
      const auto test = read_yuv(mt_test, mt_geo.width, mt_geo.height, mt_geo.bit_depth,
                                 mt_geo.chroma(), mt_geo.frames);
      if (mt_which == "psnr" || mt_which == "all") {
        const double v = psnr_luma_sequence(ref, test);
        if (is_lossless_psnr(v))
          std::printf("psnr lossless\n");
        else
          std::printf("psnr %.6f\n", v);
      }
      if (mt_which == "msssim" || mt_which == "all") {
        double acc = 0.0;
        const double maxv = ref[0].max_value();
        for (std::size_t i = 0; i < ref.size(); ++i) {
          PlaneD a = ref[i].y.cast<double>();
          PlaneD b = test[i].y.cast<double>();
          for (auto& v : a.data) v /= maxv;
          for (auto& v : b.data) v /= maxv;
          acc += ms_ssim(a, b, mt_scales);
        }
        std::printf("msssim %.8f\n", acc / static_cast<double>(ref.size()));
      }
      if (mt_which != "psnr" && mt_which != "msssim" && mt_which != "all")
        throw InputError("unknown metric: " + mt_which);
    } else if (*c_bdrate) {
      const double v = bd_rate(read_rd_curve(bd_anchor), read_rd_curve(bd_test));
      std::printf("bd_rate_percent %.6f\n", v);
    } else if (*c_pipe_run) {
      return run_pipeline_config(pipe_cfg, global_seed, static_cast<bool>(*seed_opt));
    } else if (*c_pipe_cmp) {
      const CompareReport r = compare_run_dirs(cmp_anchor, cmp_test);
      std::printf("bd_rate_percent %.6f\n", r.bd_rate_percent);
      std::printf("enc_ratio %.6f\n", r.enc_ratio);
      std::printf("dec_ratio %.6f\n", r.dec_ratio);
    } else if (*c_w_inspect) {
      const DSNetConfig model = wi_model.config();
      const ModelWeights w = load_weights(wi_path, model);
      std::printf("%-16s %5s %5s %3s %3s %7s %12s\n", "layer", "out", "in", "kh", "kw", "stride",
                  "params");
      for (const auto& l : w.layers)
        std::printf("%-16s %5d %5d %3d %3d %7d %12zu\n", l.name.c_str(), l.out_channels,
                    l.in_channels, l.kernel_h, l.kernel_w, l.stride,
                    l.weight_count() + l.bias.size());
      std::printf("total_parameters %llu\n",
                  static_cast<unsigned long long>(param_count(model)));
    } else if (*c_w_init) {
      const DSNetConfig model = w_init_model.config();
      save_weights(w_init_zero ? zero_weights(model) : random_weights(model, global_seed), w_init_out);
      std::printf("weights %s\n", w_init_out.c_str());
    } else if (*c_toy_enc) {
      toycodec_encode(te_in, te_geo.width, te_geo.height, te_geo.bit_depth, te_geo.chroma(),
                      te_geo.frames, te_qp, te_bs);
    } else if (*c_toy_dec) {
      toycodec_decode(td_bs, td_out);
    }
  } catch (const sra::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
