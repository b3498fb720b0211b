#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage, 2 data or format
// error, 3 a verification ran but its property failed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "segnoise/config.hpp"
#include "segnoise/correct.hpp"
#include "segnoise/external.hpp"
#include "segnoise/harness.hpp"
#include "segnoise/io.hpp"
#include "segnoise/log.hpp"
#include "segnoise/model.hpp"
#include "segnoise/noise.hpp"
#include "segnoise/sdf.hpp"

namespace segnoise::cli {

namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, usage = 1, data_error = 2, verification_failed = 3 };

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<fs::path> inputs(const fs::path& p, std::initializer_list<const char*> exts) {
  if (fs::is_directory(p)) {
    auto files = io::list_files(p, exts);
    if (files.empty()) throw FormatError(p.string(), 0, "directory holds no matching files");
    return files;
  }
  if (!fs::exists(p)) throw FormatError(p.string(), 0, "no such file");
  return {p};
}

inline std::vector<ScalarField> load_fields(const std::vector<fs::path>& files) {
  std::vector<ScalarField> out;
  for (const auto& f : files) out.push_back(io::load_field(f));
  return out;
}

inline std::vector<BinaryMask> load_masks(const std::vector<fs::path>& files) {
  std::vector<BinaryMask> out;
  for (const auto& f : files) out.push_back(io::load_mask(f));
  return out;
}

inline void require_pairs(std::size_t a, std::size_t b, const std::string& what) {
  if (a != b)
    throw Error(what + ": " + std::to_string(a) + " vs " + std::to_string(b) + " files, expected pairs");
}

inline std::string mask_ext(const BinaryMask& m) { return m.shape().ndim() == 2 ? ".pgm" : ".gtf"; }

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw Error("cannot write " + path.string());
}

inline nlohmann::ordered_json report_json(const TrialReport& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["passed"] = r.passed;
  j["seed"] = r.seed;
  auto& m = j["measurements"] = nlohmann::ordered_json::object();
  for (const auto& x : r.measurements) m[x.name] = x.value;
  auto& t = j["tolerances"] = nlohmann::ordered_json::object();
  for (const auto& x : r.tolerances) t[x.name] = x.value;
  return j;
}

inline nlohmann::ordered_json model_json(const LogisticSegmenter& model) {
  const auto st = model.state();
  const auto& cfg = model.config();
  nlohmann::ordered_json j;
  j["kind"] = "logistic";
  j["radii"] = cfg.radii;
  j["learning_rate"] = cfg.learning_rate;
  j["epochs"] = cfg.epochs;
  j["l2"] = cfg.l2;
  j["weights"] = st.weights;
  j["feature_mean"] = st.mean;
  j["feature_scale"] = st.scale;
  j["final_loss"] = model.loss_history().empty() ? 0.0 : model.loss_history().back();
  return j;
}

inline LogisticSegmenter model_from_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string(), 0, "cannot open model file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.at("kind") != "logistic") throw FormatError(path.string(), 0, "not a logistic model");
    TrainConfig cfg;
    cfg.radii = j.at("radii").get<std::array<std::uint32_t, 2>>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.epochs = j.at("epochs").get<std::uint32_t>();
    cfg.l2 = j.at("l2").get<double>();
    LogisticSegmenter::State st;
    st.weights = j.at("weights").get<Weights>();
    st.mean = j.at("feature_mean").get<Weights>();
    st.scale = j.at("feature_scale").get<Weights>();
    return LogisticSegmenter::restore(cfg, st);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string(), 0, std::string("bad model file: ") + e.what());
  }
}

inline ShapeFamily family_from(const std::string& s) {
  return s == "ellipses" ? ShapeFamily::ellipses : ShapeFamily::disks;
}

// Options shared by the commands that train the reference model.
struct ModelFlags {
  TrainConfig cfg;
  void add(CLI::App* app) {
    app->add_option("--epochs", cfg.epochs, "gradient descent epochs")->capture_default_str();
    app->add_option("--lr", cfg.learning_rate, "learning rate")->capture_default_str();
    app->add_option("--l2", cfg.l2, "L2 weight on non-bias weights")->capture_default_str();
  }
};

struct NoiseFlags {
  std::string preset_name;
  std::optional<std::uint32_t> steps;
  std::optional<double> theta1, theta2, theta3, smooth_sigma;
  void add(CLI::App* app) {
    app->add_option("--preset", preset_name, "named noise preset (built in or from --config)");
    app->add_option("--steps,-T", steps, "Markov steps T");
    app->add_option("--theta1", theta1, "expansion probability");
    app->add_option("--theta2", theta2, "marching probability");
    app->add_option("--theta3", theta3, "flipping probability");
    app->add_option("--smooth-sigma", smooth_sigma, "Gaussian smoothing sigma, 0 = off");
  }
  MarkovNoiseParams resolve(const FileConfig& file, const MarkovNoiseParams& fallback) const {
    MarkovNoiseParams p = preset_name.empty() ? fallback : find_preset(preset_name, file.presets).params;
    if (steps) p.steps = *steps;
    if (theta1) p.expansion = *theta1;
    if (theta2) p.marching = *theta2;
    if (theta3) p.flipping = *theta3;
    if (smooth_sigma) p.smooth_sigma = *smooth_sigma;
    p.validate();
    return p;
  }
};

}  // namespace detail

/// Parses argv and runs one subcommand. Output goes to `out`, diagnostics to `err`.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Spatially correlated label noise: simulation, signed distances and spatial correction", "segnoise"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::size_t threads = default_threads();
  std::string out_dir = ".";
  std::string config_path;
  auto* seed_opt = app.add_option("--seed", seed, "master seed")->capture_default_str();
  auto* threads_opt = app.add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);

  FileConfig file;
  int code = ok;

  // synth
  auto* synth = app.add_subcommand("synth", "render a synthetic image/mask set");
  SynthSpec synth_spec;
  std::string synth_family = "disks";
  synth->add_option("--count", synth_spec.count)->capture_default_str();
  synth->add_option("--height", synth_spec.height)->capture_default_str();
  synth->add_option("--width", synth_spec.width)->capture_default_str();
  synth->add_option("--family", synth_family)->check(CLI::IsMember({"disks", "ellipses"}))->capture_default_str();
  synth->add_option("--contrast", synth_spec.contrast)->capture_default_str();
  synth->add_option("--noise-sigma", synth_spec.noise_sigma)->capture_default_str();
  synth->add_option("--blur-sigma", synth_spec.blur_sigma)->capture_default_str();
  synth->add_option("--holes", synth_spec.holes.count, "interior holes per mask")->capture_default_str();
  synth->add_option("--hole-radius", synth_spec.holes.radius)->capture_default_str();

  // gen-noise
  auto* gen = app.add_subcommand("gen-noise", "apply Markov label noise to masks");
  std::string gen_input;
  detail::NoiseFlags gen_noise;
  gen->add_option("--input", gen_input, "mask file or directory (default: built-in 256x256 disk)");
  gen_noise.add(gen);

  // sdf
  auto* sdf = app.add_subcommand("sdf", "signed distance fields of masks");
  std::string sdf_input;
  sdf->add_option("--input", sdf_input, "mask file or directory")->required();

  // estimate-bias
  auto* est = app.add_subcommand("estimate-bias", "mean SDF gap between predicted and clean masks");
  std::string est_pred, est_clean;
  est->add_option("--pred", est_pred, "predicted mask file or directory")->required();
  est->add_option("--clean", est_clean, "clean mask file or directory")->required();

  // correct
  auto* cor = app.add_subcommand("correct", "correct predictions for a known bias");
  std::string cor_sdf, cor_logits, cor_sign = "corrective";
  double cor_delta = 0.0, cor_gamma = 1.0;
  cor->add_option("--sdf", cor_sdf, "predicted SDF file or directory (f32 GTF)")->required();
  cor->add_option("--logits", cor_logits, "logit file or directory; without it the SDF is shifted");
  cor->add_option("--delta", cor_delta, "estimated bias")->required();
  cor->add_option("--gamma", cor_gamma)->capture_default_str();
  cor->add_option("--lambda-sign", cor_sign)->check(CLI::IsMember({"corrective", "literal"}))->capture_default_str();

  // train / predict
  auto* train = app.add_subcommand("train", "fit the reference logistic model");
  std::string train_images, train_masks;
  detail::ModelFlags train_model;
  train->add_option("--images", train_images, "image file or directory (f32 GTF)")->required();
  train->add_option("--masks", train_masks, "label file or directory")->required();
  train_model.add(train);

  auto* pred = app.add_subcommand("predict", "logits and masks from a trained model");
  std::string pred_model, pred_images;
  pred->add_option("--model", pred_model, "model.json from train")->required()->check(CLI::ExistingFile);
  pred->add_option("--images", pred_images, "image file or directory")->required();

  // sc-run
  auto* sc = app.add_subcommand("sc-run", "iterative spatial correction of noisy training labels");
  std::string sc_images, sc_masks, sc_val_images, sc_val_masks, sc_truth, sc_external, sc_relabel = "logit";
  std::string sc_sign = "corrective";
  std::uint32_t sc_poll_ms = 200;
  double sc_timeout_s = 86400;
  CorrectionParams sc_params;
  detail::ModelFlags sc_model;
  sc->add_option("--images", sc_images, "training images")->required();
  sc->add_option("--masks", sc_masks, "noisy training labels")->required();
  sc->add_option("--val-images", sc_val_images, "validation images")->required();
  sc->add_option("--val-masks", sc_val_masks, "clean validation labels")->required();
  sc->add_option("--truth", sc_truth, "clean training labels, for reporting only");
  sc->add_option("--gamma", sc_params.gamma)->capture_default_str();
  sc->add_option("--max-iters", sc_params.max_iters)->capture_default_str();
  sc->add_option("--stop-threshold", sc_params.stop_threshold)->capture_default_str();
  sc->add_option("--relabel", sc_relabel)->check(CLI::IsMember({"logit", "sdf"}))->capture_default_str();
  sc->add_option("--lambda-sign", sc_sign)->check(CLI::IsMember({"corrective", "literal"}))->capture_default_str();
  sc->add_option("--external-dir", sc_external, "hand training to an external process through this directory");
  sc->add_option("--poll-ms", sc_poll_ms, "external handshake polling interval")->capture_default_str();
  sc->add_option("--timeout-s", sc_timeout_s, "external handshake timeout")->capture_default_str();
  sc_model.add(sc);

  // verify
  auto* verify = app.add_subcommand("verify", "run a property check");
  verify->require_subcommand(1);
  auto* lemma = verify->add_subcommand("lemma1", "one-step Bayes mask vs Monte Carlo expectation");
  Lemma1Config lemma_cfg;
  std::size_t lemma_size = 64;
  double lemma_radius = 16;
  lemma->add_option("--theta1", lemma_cfg.theta1)->capture_default_str();
  lemma->add_option("--theta2", lemma_cfg.theta2)->capture_default_str();
  lemma->add_option("--theta3", lemma_cfg.theta3)->capture_default_str();
  lemma->add_option("--samples", lemma_cfg.samples)->capture_default_str();
  lemma->add_option("--size", lemma_size, "disk fixture grid side")->capture_default_str();
  lemma->add_option("--radius", lemma_radius, "disk fixture radius")->capture_default_str();

  auto* thm = verify->add_subcommand("theorem1", "validation-size bound against oracle predictors");
  Theorem1Config thm_cfg;
  std::string thm_family = "disks";
  std::optional<std::uint64_t> thm_v;
  thm->add_option("--eps0", thm_cfg.bound.eps0)->capture_default_str();
  thm->add_option("--eps1", thm_cfg.bound.eps1)->capture_default_str();
  thm->add_option("--eps", thm_cfg.bound.eps)->capture_default_str();
  thm->add_option("--alpha", thm_cfg.bound.alpha)->capture_default_str();
  thm->add_option("--trials", thm_cfg.trials)->capture_default_str();
  thm->add_option("--pool-size", thm_cfg.pool_size)->capture_default_str();
  thm->add_option("--pool-side", thm_cfg.pool_side)->capture_default_str();
  thm->add_option("--validation-size", thm_v, "override the bound");
  thm->add_option("--theta1", thm_cfg.theta1)->capture_default_str();
  thm->add_option("--theta2", thm_cfg.theta2)->capture_default_str();
  thm->add_option("--family", thm_family)->check(CLI::IsMember({"disks", "ellipses"}))->capture_default_str();

  // sweep
  auto* sw = app.add_subcommand("sweep", "noise-level or validation-size sweep of the synthetic pipeline");
  std::string sw_kind = "noise-level";
  std::vector<double> sw_settings;
  PipelineConfig sw_base;
  detail::NoiseFlags sw_noise;
  detail::ModelFlags sw_model;
  std::size_t sw_side = 64;
  sw->add_option("--kind", sw_kind)->check(CLI::IsMember({"noise-level", "val-size"}))->capture_default_str();
  sw->add_option("--settings", sw_settings, "T values or V values")->required()->delimiter(',');
  sw->add_option("--count", sw_base.data.count)->capture_default_str();
  sw->add_option("--size", sw_side, "image side")->capture_default_str();
  sw->add_option("--val-count", sw_base.val_count)->capture_default_str();
  sw->add_option("--test-count", sw_base.test_count)->capture_default_str();
  sw->add_option("--max-iters", sw_base.correction.max_iters)->capture_default_str();
  sw_noise.add(sw);
  sw_model.add(sw);

  // bound
  auto* bnd = app.add_subcommand("bound", "validation set size sufficient for a bias error guarantee");
  ValidationBoundInputs bnd_in{};
  bnd->add_option("--eps0", bnd_in.eps0)->required();
  bnd->add_option("--eps1", bnd_in.eps1)->required();
  bnd->add_option("--eps", bnd_in.eps)->required();
  bnd->add_option("--alpha", bnd_in.alpha)->required();
  bnd->add_option("--image-size", bnd_in.image_size)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? ok : usage;
  }

  auto warn_to_err = set_warning_sink([&err](const std::string& m) { err << "warning: " << m << '\n'; });
  struct Restore {
    WarningSink s;
    ~Restore() { set_warning_sink(std::move(s)); }
  } restore{std::move(warn_to_err)};

  try {
    if (!config_path.empty()) {
      file = load_config(config_path);
      if (seed_opt->count() == 0 && file.seed) seed = *file.seed;
      if (threads_opt->count() == 0 && file.threads) threads = *file.threads;
      if (out_opt->count() == 0 && file.out) out_dir = *file.out;
    }
    const fs::path dir(out_dir);

    if (synth->parsed()) {
      synth_spec.family = detail::family_from(synth_family);
      synth_spec.seed = seed;
      const auto d = synth_dataset(synth_spec);
      for (std::size_t i = 0; i < synth_spec.count; ++i) {
        io::save_logits(d.images[i], dir / "images" / indexed_name(i, ".gtf"));
        io::save_mask(d.clean_masks[i], dir / "masks" / indexed_name(i, ".pgm"));
        if (!d.holed_masks.empty()) io::save_mask(d.holed_masks[i], dir / "holed" / indexed_name(i, ".pgm"));
      }
      out << "wrote " << synth_spec.count << " images to " << (dir / "images").string() << '\n';
    } else if (gen->parsed()) {
      const auto params = gen_noise.resolve(file, preset("tiny-se"));
      std::vector<fs::path> files;
      std::vector<BinaryMask> masks;
      if (gen_input.empty()) {
        masks.push_back(disk_mask(GridShape(256, 256), 127.5, 127.5, 64));
        files.push_back("disk.pgm");
        io::save_mask(masks[0], dir / "clean" / "disk.pgm");
      } else {
        files = detail::inputs(gen_input, {".pgm", ".gtf"});
        masks = detail::load_masks(files);
      }
      std::vector<BinaryMask> noisy(masks.size());
      parallel_for(masks.size(), threads, [&](std::size_t i) {
        MarkovNoiseParams p = params;
        p.seed = derive_seed(seed, i);
        noisy[i] = generate(masks[i], p);
      });
      for (std::size_t i = 0; i < masks.size(); ++i) io::save_mask(noisy[i], dir / "noisy" / files[i].filename());
      out << "wrote " << masks.size() << " noisy masks to " << (dir / "noisy").string() << '\n';
    } else if (sdf->parsed()) {
      const auto files = detail::inputs(sdf_input, {".pgm", ".gtf"});
      for (const auto& f : files) {
        const auto phi = signed_distance(io::load_mask(f));
        io::save_sdf(phi, dir / "sdf" / (f.stem().string() + ".gtf"));
      }
      out << "wrote " << files.size() << " SDFs to " << (dir / "sdf").string() << '\n';
    } else if (est->parsed()) {
      const auto pf = detail::inputs(est_pred, {".pgm", ".gtf"});
      const auto cf = detail::inputs(est_clean, {".pgm", ".gtf"});
      detail::require_pairs(pf.size(), cf.size(), "estimate-bias");
      std::vector<SignedDistanceField> p_sdf, c_sdf;
      std::vector<std::size_t> used;
      for (std::size_t i = 0; i < pf.size(); ++i) {
        const auto pm = io::load_mask(pf[i]);
        const auto cm = io::load_mask(cf[i]);
        require_same_shape(pm.shape(), cm.shape(), "estimate-bias");
        try {
          auto a = signed_distance(pm);
          auto b = signed_distance(cm);
          p_sdf.push_back(std::move(a));
          c_sdf.push_back(std::move(b));
          used.push_back(i);
        } catch (const DegenerateMask&) {
          warn("skipping " + pf[i].filename().string() + ": mask has no interface");
        }
      }
      if (used.empty()) throw DegenerateMask("estimate-bias: every pair is degenerate");
      const auto b = estimate_bias(p_sdf, c_sdf);
      std::ostringstream csv;
      csv << "pred,clean,gap\n";
      for (std::size_t k = 0; k < used.size(); ++k)
        csv << pf[used[k]].filename().string() << ',' << cf[used[k]].filename().string() << ','
            << detail::num(b.per_image_gaps[k]) << '\n';
      detail::write_text(dir / "bias.csv", csv.str());
      out << detail::num(b.delta_hat) << '\n';
    } else if (cor->parsed()) {
      const auto sf = detail::inputs(cor_sdf, {".gtf"});
      std::vector<fs::path> lf;
      if (!cor_logits.empty()) {
        lf = detail::inputs(cor_logits, {".gtf"});
        detail::require_pairs(sf.size(), lf.size(), "correct");
      }
      const auto sign = cor_sign == "literal" ? LambdaSign::literal : LambdaSign::corrective;
      for (std::size_t i = 0; i < sf.size(); ++i) {
        const auto phi = io::load_sdf(sf[i]);
        BinaryMask m;
        if (lf.empty()) {
          m = naive_correct(phi, cor_delta);
        } else {
          const auto logits = io::load_field(lf[i]);
          try {
            m = threshold(logit_correct(logits, phi, cor_delta, cor_gamma, sign), Compare::greater_equal, 0.0);
          } catch (const EmptyBand&) {
            warn(lf[i].filename().string() + ": no sites in the correction band, keeping the prediction");
            m = threshold(logits, Compare::greater_equal, 0.0);
          }
        }
        io::save_mask(m, dir / "corrected" / (sf[i].stem().string() + detail::mask_ext(m)));
      }
      out << "wrote " << sf.size() << " corrected masks to " << (dir / "corrected").string() << '\n';
    } else if (train->parsed()) {
      const auto images = detail::load_fields(detail::inputs(train_images, {".gtf"}));
      const auto masks = detail::load_masks(detail::inputs(train_masks, {".pgm", ".gtf"}));
      detail::require_pairs(images.size(), masks.size(), "train");
      train_model.cfg.seed = seed;
      const auto model = fit_logistic(images, masks, train_model.cfg);
      detail::write_text(dir / "model.json", detail::model_json(model).dump(2) + "\n");
      out << "final loss " << detail::num(model.loss_history().back()) << "; wrote " << (dir / "model.json").string()
          << '\n';
    } else if (pred->parsed()) {
      const auto model = detail::model_from_json(pred_model);
      const auto files = detail::inputs(pred_images, {".gtf"});
      for (const auto& f : files) {
        const auto logits = model.predict_logits(io::load_field(f));
        io::save_logits(logits, dir / "logits" / f.filename());
        const auto m = threshold(logits, Compare::greater_equal, 0.0);
        io::save_mask(m, dir / "pred" / (f.stem().string() + detail::mask_ext(m)));
      }
      out << "wrote " << files.size() << " predictions to " << dir.string() << '\n';
    } else if (sc->parsed()) {
      LabeledImages tr, val;
      tr.images = detail::load_fields(detail::inputs(sc_images, {".gtf"}));
      const auto mask_files = detail::inputs(sc_masks, {".pgm", ".gtf"});
      tr.masks = detail::load_masks(mask_files);
      val.images = detail::load_fields(detail::inputs(sc_val_images, {".gtf"}));
      val.masks = detail::load_masks(detail::inputs(sc_val_masks, {".pgm", ".gtf"}));
      detail::require_pairs(tr.images.size(), tr.masks.size(), "sc-run training set");
      detail::require_pairs(val.images.size(), val.masks.size(), "sc-run validation set");
      std::vector<BinaryMask> truth;
      if (!sc_truth.empty()) {
        truth = detail::load_masks(detail::inputs(sc_truth, {".pgm", ".gtf"}));
        detail::require_pairs(tr.masks.size(), truth.size(), "sc-run truth");
      }
      sc_params.relabel = sc_relabel == "sdf" ? RelabelRule::signed_distance : RelabelRule::logit;
      sc_params.lambda_sign = sc_sign == "literal" ? LambdaSign::literal : LambdaSign::corrective;
      sc_params.seed = seed;
      sc_params.threads = threads;
      CorrectionResult result;
      std::optional<LogisticSegmenter> logistic;
      if (sc_external.empty()) {
        logistic.emplace(sc_model.cfg);
        result = spatial_correction(tr, val, *logistic, sc_params, truth);
      } else {
        ExternalSegmenter::Options opts;
        opts.poll = std::chrono::milliseconds(sc_poll_ms);
        opts.timeout = std::chrono::milliseconds(static_cast<long long>(sc_timeout_s * 1000.0));
        ExternalSegmenter ext(sc_external, tr.images, val.images, opts);
        result = spatial_correction(tr, val, ext, sc_params, truth);
      }
      for (std::size_t i = 0; i < result.labels.size(); ++i)
        io::save_mask(result.labels[i], dir / "labels" / mask_files[i].filename());
      std::ostringstream csv;
      csv << "iter,delta_hat,lambda_mean,train_label_dsc,val_dsc,v_used,skipped\n";
      for (const auto& r : result.reports)
        csv << r.iter << ',' << detail::num(r.delta_hat) << ',' << detail::num(r.lambda_mean) << ','
            << (r.train_label_dsc ? detail::num(*r.train_label_dsc) : "") << ',' << detail::num(r.val_dsc) << ','
            << r.v_used << ',' << r.skipped << '\n';
      detail::write_text(dir / "sc_report.csv", csv.str());
      if (logistic) detail::write_text(dir / "model.json", detail::model_json(*logistic).dump(2) + "\n");
      out << "rounds " << result.reports.size() << ", final bias " << detail::num(result.final_bias.delta_hat) << '\n';
    } else if (lemma->parsed()) {
      lemma_cfg.seed = seed;
      lemma_cfg.threads = threads;
      const double c = (static_cast<double>(lemma_size) - 1.0) / 2.0;
      const auto r = verify_lemma1(disk_mask(GridShape(lemma_size, lemma_size), c, c, lemma_radius), lemma_cfg);
      const auto path = dir / "lemma1.json";
      detail::write_text(path, detail::report_json(r).dump(2) + "\n");
      out << (r.passed ? "PASS" : "FAIL") << " lemma1 report " << path.string() << '\n';
      code = r.passed ? ok : verification_failed;
    } else if (thm->parsed()) {
      thm_cfg.family = detail::family_from(thm_family);
      thm_cfg.validation_size = thm_v;
      thm_cfg.bound.image_size = thm_cfg.pool_side * thm_cfg.pool_side;
      thm_cfg.seed = seed;
      thm_cfg.threads = threads;
      const auto res = verify_theorem1(thm_cfg);
      const auto path = dir / "theorem1.json";
      detail::write_text(path, detail::report_json(res.report).dump(2) + "\n");
      std::ostringstream csv;
      csv << "trial,delta_hat,error,failed\n";
      for (std::size_t t = 0; t < res.trials.size(); ++t)
        csv << t << ',' << detail::num(res.trials[t].delta_hat) << ',' << detail::num(res.trials[t].error) << ','
            << (res.trials[t].failed ? 1 : 0) << '\n';
      detail::write_text(dir / "theorem1_trials.csv", csv.str());
      out << (res.report.passed ? "PASS" : "FAIL") << " theorem1 report " << path.string() << '\n';
      code = res.report.passed ? ok : verification_failed;
    } else if (sw->parsed()) {
      sw_base.data.height = sw_base.data.width = sw_side;
      sw_base.noise = sw_noise.resolve(file, preset("tiny-se"));
      sw_base.model = sw_model.cfg;
      sw_base.correction.threads = threads;
      sw_base.seed = seed;
      const auto kind = sw_kind == "val-size" ? SweepKind::val_size : SweepKind::noise_level;
      const auto rows = sweep(kind, sw_settings, sw_base);
      std::ostringstream csv;
      csv << "kind,setting,arm,test_dsc\n";
      for (const auto& r : rows) csv << r.kind << ',' << detail::num(r.setting) << ',' << r.arm << ',' << detail::num(r.test_dsc) << '\n';
      const auto path = dir / ("sweep_" + rows.front().kind + ".csv");
      detail::write_text(path, csv.str());
      out << "wrote " << path.string() << '\n';
    } else if (bnd->parsed()) {
      out << required_validation_size(bnd_in) << '\n';
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return data_error;
  }
  return code;
}

}  // namespace segnoise::cli
