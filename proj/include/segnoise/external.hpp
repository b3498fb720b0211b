#pragma once

// File handshake that lets an out-of-process trainer take part in the
// correction loop. Round k uses <dir>/round_<k>/:
//
//   labels/NNNN.pgm|.gtf   written by us: current training labels
//   READY                  written by us once the labels are complete
//   train_logits/NNNN.gtf  written by the trainer: f32 logits per train image
//   val_logits/NNNN.gtf    written by the trainer: f32 logits per val image
//   DONE                   written by the trainer once all logits exist
//
// NNNN is the zero-padded image index. Logit sign: positive = foreground.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "segnoise/io.hpp"
#include "segnoise/segmenter.hpp"

namespace segnoise {

inline std::string indexed_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu%s", i, ext);
  return buf;
}

class ExternalSegmenter final : public Segmenter {
 public:
  struct Options {
    std::chrono::milliseconds poll{200};
    std::chrono::milliseconds timeout{std::chrono::hours(24)};
    bool labels_as_pgm = true;
  };

  ExternalSegmenter(std::filesystem::path dir, std::vector<ScalarField> train_images,
                    std::vector<ScalarField> val_images, Options opts)
      : dir_(std::move(dir)), train_(std::move(train_images)), val_(std::move(val_images)), opts_(opts) {}

  void fit(std::span<const ScalarField> images, std::span<const BinaryMask> labels, std::uint64_t) override {
    if (images.size() != train_.size() || labels.size() != train_.size())
      throw InvalidArgument("external trainer: label count does not match the registered training set");
    const auto round_dir = dir_ / ("round_" + std::to_string(round_));
    for (std::size_t i = 0; i < labels.size(); ++i)
      io::save_mask(labels[i], round_dir / "labels" /
                                   indexed_name(i, opts_.labels_as_pgm && labels[i].shape().ndim() == 2 ? ".pgm" : ".gtf"));
    std::ofstream(round_dir / "READY") << labels.size() << '\n';

    const auto deadline = std::chrono::steady_clock::now() + opts_.timeout;
    while (!std::filesystem::exists(round_dir / "DONE")) {
      if (std::chrono::steady_clock::now() > deadline)
        throw Error("external trainer: timed out waiting for " + (round_dir / "DONE").string());
      std::this_thread::sleep_for(opts_.poll);
    }
    train_logits_ = load_all(round_dir / "train_logits", train_);
    val_logits_ = load_all(round_dir / "val_logits", val_);
    ++round_;
  }

  /// Returns the logits the trainer produced for a registered image.
  ScalarField predict_logits(const ScalarField& image) const override {
    for (std::size_t i = 0; i < train_.size(); ++i)
      if (i < train_logits_.size() && train_[i] == image) return train_logits_[i];
    for (std::size_t i = 0; i < val_.size(); ++i)
      if (i < val_logits_.size() && val_[i] == image) return val_logits_[i];
    throw Error("external trainer: no logits for an unregistered image");
  }

  std::size_t rounds_completed() const noexcept { return round_; }

 private:
  static std::vector<ScalarField> load_all(const std::filesystem::path& dir, const std::vector<ScalarField>& images) {
    std::vector<ScalarField> out;
    out.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
      auto f = io::load_external_logits(dir / indexed_name(i, ".gtf"));
      require_same_shape(f.shape(), images[i].shape(), "external logits");
      out.push_back(std::move(f));
    }
    return out;
  }

  std::filesystem::path dir_;
  std::vector<ScalarField> train_, val_;
  Options opts_;
  std::vector<ScalarField> train_logits_, val_logits_;
  std::size_t round_ = 0;
};

}  // namespace segnoise
