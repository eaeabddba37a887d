// Command-line front end: encode, dataset, train, enhance, report, synth.

#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "paqe/codec.hpp"
#include "paqe/common.hpp"
#include "paqe/enhance.hpp"
#include "paqe/frame.hpp"
#include "paqe/ilf.hpp"
#include "paqe/metrics.hpp"
#include "paqe/synth.hpp"
#include "paqe/train.hpp"

namespace {

int run_encode(const std::string& in, int w, int h, paqe::EncoderConfig cfg,
               const std::string& out_prefix, const std::string& ilf_mode,
               const std::string& models_dir) {
  const auto frames = paqe::read_raw_video(in, w, h);
  const paqe::IlfMode mode = paqe::ilf_mode_from_name(ilf_mode);
  paqe::ModelTriple models;
  paqe::IlfConfig ilf;
  ilf.mode = mode;
  if (mode != paqe::IlfMode::REF) {
    if (models_dir.empty())
      throw paqe::contract_error("--models is required for ilf mode " + ilf_mode);
    models = paqe::load_model_triple(models_dir);
    ilf.models = &models;
  }
  const paqe::IlfResult result = paqe::encode_with_ilf(frames, cfg, ilf);
  paqe::write_encode_artifacts(result.enc, out_prefix);
  if (mode == paqe::IlfMode::ADAPTIVE)
    paqe::write_ilf_decisions_csv(result.decisions, out_prefix + ".decisions.csv");
  std::cout << "encoded " << frames.size() << " frames -> " << out_prefix
            << ".{recon.yuv,pred.yuv,meta.jsonl,residual.bin,rates.csv}\n";
  return 0;
}

int run_dataset(const std::vector<std::string>& inputs, int w, int h,
                paqe::EncoderConfig cfg, const std::vector<int>& qps,
                int frames_per_video, std::uint64_t seed,
                const std::string& out_dir) {
  std::vector<std::pair<std::string, std::vector<paqe::Frame420>>> videos;
  for (const auto& path : inputs)
    videos.emplace_back(path, paqe::read_raw_video(path, w, h));
  const paqe::DatasetStore store =
      paqe::generate_dataset(videos, cfg, qps, frames_per_video, seed);
  paqe::save_dataset(store, out_dir);
  std::cout << "dataset: " << store.intra.size() << " intra + "
            << store.inter.size() << " inter entries -> " << out_dir << "\n";
  return 0;
}

int run_train(const std::string& dataset_dir, const std::string& profile,
              int channels, int num_blocks, std::uint64_t seed,
              const std::string& out_dir) {
  paqe::TrainSchedule schedule = profile == "paper"
                                     ? paqe::TrainSchedule::paper_profile()
                                     : paqe::TrainSchedule::desk_profile();
  schedule.seed = seed;
  const paqe::DatasetStore store = paqe::load_dataset(dataset_dir);
  if (store.intra.empty() || store.inter.empty())
    throw paqe::contract_error("train: dataset needs both intra and inter entries");
  // Patch size cannot exceed the smallest frame in the stores.
  for (const auto* entries : {&store.intra, &store.inter})
    for (const auto& e : *entries)
      schedule.patch = std::min({schedule.patch, e.orig.width, e.orig.height});

  struct Job {
    const char* name;
    const std::vector<paqe::FrameEntry>* entries;
    int in_channels;
    bool exclude_skip;
  };
  const Job jobs[] = {
      {"intra", &store.intra, 3, false},
      {"inter", &store.inter, 3, true},
      {"unaware", &store.inter, 2, false},
  };
  for (const Job& job : jobs) {
    const auto validation = paqe::make_validation_set(*job.entries);
    const paqe::TrainResult r =
        paqe::train_model(*job.entries, validation, job.in_channels, channels,
                          num_blocks, schedule, job.exclude_skip);
    paqe::QENetwork net = r.net;
    paqe::save_weights(net, out_dir + "/" + job.name + ".paqe");
    paqe::write_loss_csv(r.curve, out_dir + "/loss_" + job.name + ".csv");
    std::cout << "trained " << job.name << ": best epoch " << r.best_epoch
              << ", val L1 " << r.best_val_l1 << "\n";
  }
  return 0;
}

int run_enhance(const std::string& recon_path, const std::string& pred_path,
                const std::string& meta_path, const std::string& models_dir,
                int w, int h, const std::string& out_path,
                const std::string& report_orig) {
  const auto recon = paqe::read_raw_video(recon_path, w, h);
  const auto pred = paqe::read_raw_video(pred_path, w, h);
  const auto metas = paqe::read_meta_file(meta_path);
  if (recon.size() != pred.size() || recon.size() != metas.size())
    throw paqe::contract_error("enhance: recon/pred/meta frame counts differ");
  paqe::ModelTriple models = paqe::load_model_triple(models_dir);
  std::vector<paqe::Frame420> enhanced;
  enhanced.reserve(recon.size());
  for (std::size_t f = 0; f < recon.size(); ++f)
    enhanced.push_back(
        paqe::enhance_frame420(models, recon[f], pred[f], metas[f]));
  paqe::write_raw_video(enhanced, out_path);
  if (!report_orig.empty()) {
    const auto orig = paqe::read_raw_video(report_orig, w, h);
    if (orig.size() != recon.size())
      throw paqe::contract_error("enhance: original frame count differs");
    std::ofstream csv(out_path + ".psnr.csv", std::ios::trunc);
    if (!csv) throw paqe::io_error("cannot open " + out_path + ".psnr.csv");
    csv << "poc,psnr_recon,psnr_enhanced\n";
    csv.precision(10);
    for (std::size_t f = 0; f < recon.size(); ++f)
      csv << f << "," << paqe::psnr_plane(recon[f].y, orig[f].y) << ","
          << paqe::psnr_plane(enhanced[f].y, orig[f].y) << "\n";
  }
  std::cout << "enhanced " << recon.size() << " frames -> " << out_path << "\n";
  return 0;
}

int run_report(const std::string& in_csv, const std::string& anchor,
               const std::string& out_csv, const std::string& plot_csv) {
  const auto rows = paqe::read_rd_csv(in_csv);
  std::map<std::string, std::vector<paqe::RDCurveRow>> curves;
  for (const auto& r : rows) curves[r.label].push_back(r);
  auto it = curves.find(anchor);
  if (it == curves.end())
    throw paqe::contract_error("report: anchor label \"" + anchor +
                               "\" not in " + in_csv);
  auto to_points = [](std::vector<paqe::RDCurveRow> c) {
    std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) {
      return a.quality < b.quality;
    });
    std::vector<paqe::RDPoint> pts;
    for (const auto& r : c) pts.push_back({r.rate_bits, r.quality});
    return pts;
  };
  const auto anchor_pts = to_points(it->second);

  std::ofstream out(out_csv, std::ios::trunc);
  if (!out) throw paqe::io_error("cannot open " + out_csv);
  out << "label,bd_rate_percent,delta_psnr_db\n";
  out.precision(10);
  for (const auto& [label, curve] : curves) {
    if (label == anchor) continue;
    const double bd = paqe::bd_rate(anchor_pts, to_points(curve));
    // Mean quality difference at matching qp.
    std::map<int, double> anchor_q;
    for (const auto& r : it->second) anchor_q[r.qp] = r.quality;
    double dsum = 0.0;
    int n = 0;
    for (const auto& r : curve) {
      const auto q = anchor_q.find(r.qp);
      if (q == anchor_q.end())
        throw paqe::contract_error("report: label \"" + label +
                                   "\" has qp " + std::to_string(r.qp) +
                                   " missing from anchor");
      dsum += r.quality - q->second;
      ++n;
    }
    out << label << "," << bd << "," << (n ? dsum / n : 0.0) << "\n";
  }
  if (!plot_csv.empty()) {
    std::ofstream plot(plot_csv, std::ios::trunc);
    if (!plot) throw paqe::io_error("cannot open " + plot_csv);
    plot << "label,rate_bits,quality\n";
    plot.precision(10);
    for (const auto& r : rows)
      plot << r.label << "," << r.rate_bits << "," << r.quality << "\n";
  }
  std::cout << "report -> " << out_csv << "\n";
  return 0;
}

int run_synth(const std::string& out, int w, int h, int frames,
              std::uint64_t seed, bool static_pair) {
  std::vector<paqe::Frame420> clip;
  if (static_pair) {
    clip = paqe::synthesize_static_pair(w, h, seed);
  } else {
    paqe::SynthParams p;
    p.width = w;
    p.height = h;
    p.frames = frames;
    p.seed = seed;
    clip = paqe::synthesize_clip(p);
  }
  paqe::write_raw_video(clip, out);
  std::cout << "synthesized " << clip.size() << " frames -> " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prediction-aware quality enhancement toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");
  // Help is --help only: the short form would collide with the --h
  // (luma height) option used by several subcommands.
  app.set_help_flag("--help", "print help and exit");

  int jobs = 0;
  std::uint64_t seed = 1;
  app.add_option("--jobs", jobs, "worker thread count (0 = hardware)");
  app.add_option("--seed", seed, "random seed");

  // encode
  auto* enc = app.add_subcommand("encode", "encode a raw video with the toy codec");
  std::string enc_in, enc_out, ilf_mode = "ref", models_dir;
  int enc_w = 0, enc_h = 0;
  paqe::EncoderConfig enc_cfg;
  enc->add_option("--in", enc_in, "input .yuv (10-bit 4:2:0, 16-bit LE)")->required();
  enc->add_option("--w", enc_w, "luma width")->required();
  enc->add_option("--h", enc_h, "luma height")->required();
  enc->add_option("--qp", enc_cfg.base_qp, "base qp [1,63]");
  enc->add_option("--gop", enc_cfg.gop_size, "GOP size (power of two)");
  enc->add_option("--intra-period", enc_cfg.intra_period, "intra period (0 = first only)");
  enc->add_option("--block", enc_cfg.block_size, "block size");
  enc->add_option("--search", enc_cfg.search_range, "motion search range");
  enc->add_option("--ilf-mode", ilf_mode,
                  "in-loop enhancement: ref|ci|c0|c1|c2|c3|c4|adaptive");
  enc->add_option("--models", models_dir, "directory with intra/inter/unaware.paqe");
  enc->add_option("--out", enc_out, "output prefix (default: input path)");

  // dataset
  auto* ds = app.add_subcommand("dataset", "build a training dataset from videos");
  std::vector<std::string> ds_in;
  std::string ds_out;
  int ds_w = 0, ds_h = 0, ds_frames = 4;
  std::vector<int> ds_qps = paqe::default_dataset_qps();
  paqe::EncoderConfig ds_cfg;
  ds->add_option("--in", ds_in, "input .yuv files")->required()->expected(-1);
  ds->add_option("--w", ds_w, "luma width")->required();
  ds->add_option("--h", ds_h, "luma height")->required();
  ds->add_option("--qps", ds_qps, "base qp list");
  ds->add_option("--frames-per-video", ds_frames, "frames sampled per (video, qp)");
  ds->add_option("--gop", ds_cfg.gop_size, "GOP size");
  ds->add_option("--intra-period", ds_cfg.intra_period, "intra period");
  ds->add_option("--out", ds_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "train the three enhancement models");
  std::string tr_dataset, tr_profile = "desk", tr_out;
  int tr_channels = 0, tr_blocks = 0;
  tr->add_option("--dataset", tr_dataset, "dataset directory")->required();
  tr->add_option("--profile", tr_profile, "paper|desk")
      ->check(CLI::IsMember({"paper", "desk"}));
  tr->add_option("--channels", tr_channels, "feature channels (default by profile)");
  tr->add_option("--blocks", tr_blocks, "residual blocks N (default by profile)");
  tr->add_option("--out", tr_out, "output directory")->required();

  // enhance
  auto* en = app.add_subcommand("enhance", "post-process decoded video");
  std::string en_recon, en_pred, en_meta, en_models, en_out, en_report;
  int en_w = 0, en_h = 0;
  en->add_option("--recon", en_recon, "reconstruction .yuv")->required();
  en->add_option("--pred", en_pred, "prediction .yuv")->required();
  en->add_option("--meta", en_meta, "metadata .jsonl")->required();
  en->add_option("--models", en_models, "model directory")->required();
  en->add_option("--w", en_w, "luma width")->required();
  en->add_option("--h", en_h, "luma height")->required();
  en->add_option("--out", en_out, "output .yuv")->required();
  en->add_option("--report", en_report, "original .yuv for a per-frame PSNR CSV");

  // report
  auto* rp = app.add_subcommand("report", "BD-rate / delta-PSNR report from RD CSV");
  std::string rp_in, rp_anchor, rp_out, rp_plot;
  rp->add_option("--in", rp_in, "RD csv (label,qp,rate_bits,quality)")->required();
  rp->add_option("--anchor", rp_anchor, "anchor curve label")->required();
  rp->add_option("--out", rp_out, "report csv")->required();
  rp->add_option("--plot", rp_plot, "plot-data csv (rate vs quality per curve)");

  // synth
  auto* sy = app.add_subcommand("synth", "generate a synthetic test clip");
  std::string sy_out;
  int sy_w = 64, sy_h = 64, sy_frames = 17;
  bool sy_static = false;
  sy->add_option("--out", sy_out, "output .yuv")->required();
  sy->add_option("--w", sy_w, "luma width");
  sy->add_option("--h", sy_h, "luma height");
  sy->add_option("--frames", sy_frames, "frame count");
  sy->add_flag("--static-pair", sy_static, "two identical frames");

  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) {
    sub->set_help_flag("--help", "print help and exit");
    // lets the global --jobs/--seed options appear after the subcommand name
    sub->fallthrough(true);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (jobs > 0) paqe::set_job_count(jobs);
    if (*enc) {
      if (enc_out.empty()) enc_out = enc_in;
      return run_encode(enc_in, enc_w, enc_h, enc_cfg, enc_out, ilf_mode,
                        models_dir);
    }
    if (*ds) return run_dataset(ds_in, ds_w, ds_h, ds_cfg, ds_qps, ds_frames,
                                seed, ds_out);
    if (*tr) {
      const bool paper = tr_profile == "paper";
      if (tr_channels <= 0) tr_channels = paper ? 256 : 16;
      if (tr_blocks <= 0) tr_blocks = paper ? 16 : 2;
      return run_train(tr_dataset, tr_profile, tr_channels, tr_blocks, seed,
                       tr_out);
    }
    if (*en) return run_enhance(en_recon, en_pred, en_meta, en_models, en_w,
                                en_h, en_out, en_report);
    if (*rp) return run_report(rp_in, rp_anchor, rp_out, rp_plot);
    if (*sy) return run_synth(sy_out, sy_w, sy_h, sy_frames, seed, sy_static);
  } catch (const paqe::contract_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const paqe::format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
