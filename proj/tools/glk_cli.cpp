#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glk/glk.hpp"
#include "json_config.hpp"

namespace fs = std::filesystem;
using namespace glk;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kDegenerate = 4,
  kDimension = 5,
};

struct ExitError {
  int code;
  std::string message;
};

CLI::App* subcommand(CLI::App& app, const std::string& name, const std::string& description) {
  CLI::App* sub = app.add_subcommand(name, description);
  sub->fallthrough();
  return sub;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct LoadedImage {
  std::string name;
  LabelMap labels;
};

std::vector<LoadedImage> load_dataset(const fs::path& manifest_path) {
  const Manifest m = load_manifest(manifest_path);
  std::vector<LoadedImage> out;
  out.reserve(m.images.size());
  for (const auto& e : m.images) out.push_back({e.plant_id, load_labelmap(e.label)});
  return out;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  long long count = 20;
  std::uint64_t seed = 0;
  fs::path out;
  RosetteConfig rosette;
  bool no_occlusion = false;
};

void add_rosette_flags(CLI::App* sub, RosetteConfig& r) {
  sub->add_option("--width", r.width, "Image width")->capture_default_str();
  sub->add_option("--height", r.height, "Image height")->capture_default_str();
  sub->add_option("--n-min", r.n_min, "Minimum leaf count")->capture_default_str();
  sub->add_option("--n-max", r.n_max, "Maximum leaf count")->capture_default_str();
  sub->add_option("--center-jitter", r.center_jitter, "Centre jitter in pixels")->capture_default_str();
  sub->add_option("--growth", r.growth, "Leaf length ratio between whorls")->capture_default_str();
  sub->add_option("--aspect-min", r.aspect_min, "Minimum leaf width/length")->capture_default_str();
  sub->add_option("--aspect-max", r.aspect_max, "Maximum leaf width/length")->capture_default_str();
  sub->add_option("--reach", r.reach, "Outer leaf length as a fraction of min(W, H)")->capture_default_str();
  sub->add_option("--phyllotaxis", r.phyllotaxis, "Angle between successive leaves (radians)")->capture_default_str();
}

int run_synth(SynthArgs& a) {
  if (a.count < 0) throw ExitError{kUsage, "--count must be non-negative"};
  a.rosette.seed = a.seed;
  a.rosette.occlusion = !a.no_occlusion;
  const fs::path manifest = generate_dataset(a.rosette, static_cast<std::size_t>(a.count), a.out);
  std::cout << manifest.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- train-guides

struct TrainArgs {
  fs::path manifest;
  fs::path out;
  std::size_t d_g = 16;
  double epsilon = 2.0;
  GuideTrainConfig train;
};

int run_train(TrainArgs& a) {
  const auto images = load_dataset(a.manifest);
  if (images.empty()) throw DegenerateDatasetError("manifest lists no images");
  const int w = images.front().labels.width();
  const int h = images.front().labels.height();
  std::vector<LabelMap> maps;
  maps.reserve(images.size());
  for (const auto& img : images) {
    if (img.labels.width() != w || img.labels.height() != h)
      throw ExitError{kDimension, "image " + img.name + " is " + std::to_string(img.labels.width()) + "x" +
                                      std::to_string(img.labels.height()) + ", expected " + std::to_string(w) + "x" +
                                      std::to_string(h)};
    maps.push_back(img.labels);
  }
  a.train.validate();
  const GuideBank init = init_guides(a.d_g, w, h, a.epsilon, a.train.seed);
  const TrainResult result = train_guides(maps, a.train, init);

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out.string() + ": " + ec.message());
  save_guide_bank(result.bank, a.out / "guidebank.json");
  write_text_file(a.out / "loss.csv", loss_history_csv(result.history));

  const double first = result.history.empty() ? 0.0 : result.history.front();
  const double last = separation_loss(result.bank, std::span<const LabelMap>(maps));
  std::cout << "epochs=" << a.train.epochs << " initial_loss=" << fmt("%.6g", first) << " best_loss=" << fmt("%.6g", last)
            << " best_epoch=" << result.best_epoch << "\n";
  return kOk;
}

// ---------------------------------------------------------------- embed

struct EmbedArgs {
  fs::path guides;
  std::vector<fs::path> labels;
  fs::path manifest;
  fs::path out;
};

int run_embed(EmbedArgs& a) {
  const GuideBank bank = load_guide_bank(a.guides);
  std::vector<LoadedImage> images;
  if (!a.manifest.empty()) images = load_dataset(a.manifest);
  for (const auto& p : a.labels) images.push_back({p.stem().string(), load_labelmap(p)});

  std::string csv = "image,instance_id";
  for (std::size_t k = 1; k <= bank.size(); ++k) csv += ",e_" + std::to_string(k);
  csv += "\n";
  for (const auto& img : images) {
    if (img.labels.width() != bank.width || img.labels.height() != bank.height)
      throw ExitError{kDimension, "image " + img.name + " does not match the guide bank's " + std::to_string(bank.width) +
                                      "x" + std::to_string(bank.height) + " grid"};
    for (const auto& inst : instances_of(img.labels)) {
      csv += img.name + "," + std::to_string(inst.id);
      for (double v : guided_embedding(bank, inst).values) csv += "," + fmt("%.17g", v);
      csv += "\n";
    }
  }
  if (a.out.empty()) std::cout << csv;
  else write_text_file(a.out, csv);
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  fs::path pred;
  fs::path gt;
  fs::path out;
  std::string sizes;
  std::size_t small_max = 0;
  std::size_t medium_max = 0;
};

int run_eval(EvalArgs& a) {
  std::optional<SizeThresholds> thresholds;
  if (a.sizes == "msu") thresholds = SizeThresholds::msu();
  else if (a.sizes == "komatsuna") thresholds = SizeThresholds::komatsuna();
  else if (a.sizes == "custom") {
    if (a.small_max == 0 || a.medium_max == 0)
      throw ExitError{kUsage, "--sizes custom needs --small-max and --medium-max"};
    thresholds = SizeThresholds{a.small_max, a.medium_max};
    thresholds->validate();
  }

  const auto pred = load_dataset(a.pred);
  const auto gt = load_dataset(a.gt);
  if (pred.size() != gt.size())
    throw ExitError{kUsage, "prediction manifest lists " + std::to_string(pred.size()) + " images but ground truth lists " +
                                std::to_string(gt.size())};
  std::vector<EvalPair> pairs;
  pairs.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (pred[i].labels.width() != gt[i].labels.width() || pred[i].labels.height() != gt[i].labels.height())
      throw ExitError{kDimension, "image " + gt[i].name + ": prediction and ground truth sizes differ"};
    pairs.push_back({gt[i].name, instances_of(pred[i].labels), gt[i].labels});
  }
  const MetricsReport report = evaluate_dataset(pairs, thresholds);

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out.string() + ": " + ec.message());
  write_text_file(a.out / "metrics.json", report_to_json(report));
  write_text_file(a.out / "metrics.csv", report_to_csv(report));

  std::cout << aggregate_line(report.aggregate) << "\n";
  for (const auto& c : report.categories) std::cout << to_string(c.category) << ": " << aggregate_line(c.aggregate) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- perturb

struct PerturbArgs {
  fs::path manifest;
  fs::path out;
  PerturbSpec spec;
};

int run_perturb(PerturbArgs& a) {
  a.spec.validate();
  const Manifest gt = load_manifest(a.manifest);
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out.string() + ": " + ec.message());
  Manifest out;
  for (std::size_t i = 0; i < gt.images.size(); ++i) {
    const auto& e = gt.images[i];
    PerturbSpec spec = a.spec;
    spec.seed = derive_seed(a.spec.seed, i);
    const LabelMap labels = load_labelmap(e.label);
    const LabelMap pred = stack_to_labelmap(perturb(labels, spec));
    const fs::path file = a.out / e.label.filename();
    save_labelmap(pred, file);
    out.images.push_back({e.label.filename(), e.plant_id});
  }
  save_manifest(out, a.out / "manifest.json");
  std::cout << (a.out / "manifest.json").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- gpe

struct GpeArgs {
  fs::path guides;
  int h = 0;
  int w = 0;
  int d_p = 256;
  fs::path out;
};

int run_gpe(GpeArgs& a) {
  const GuideBank bank = load_guide_bank(a.guides);
  save_grid(gpe(bank, a.h, a.w, a.d_p), a.out);
  std::cout << a.out.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- gdpq-demo

struct GdpqArgs {
  fs::path guides;
  std::vector<fs::path> masks;
  std::uint64_t seed = 0;
  bool binarize = false;
  std::size_t d_out = 256;
  std::size_t hidden = 0;
  fs::path out;
};

int run_gdpq(GdpqArgs& a) {
  const GuideBank bank = load_guide_bank(a.guides);
  SoftMaskStack masks = load_mask_layers(a.masks);
  if (a.binarize) masks = binarize(masks);
  const std::size_t hidden = a.hidden == 0 ? a.d_out : a.hidden;
  const MlpParams mlp = init_mlp(bank.size(), hidden, a.d_out, a.seed);
  const QueryBias bias{std::vector<double>(bank.size(), 0.0)};

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out.string() + ": " + ec.message());
  save_grid(matrix_as_grid(guided_mask_embeddings(bank, masks)), a.out / "embeddings.bin");
  save_grid(matrix_as_grid(gdpq(bank, masks, mlp, bias)), a.out / "queries.bin");
  write_text_file(a.out / "mlp.json", mlp_to_json(mlp));
  std::cout << (a.out / "queries.bin").string() << "\n";
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const GenerationError*>(&e)) return kUsage;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) || dynamic_cast<const NotFoundError*>(&e) ||
      dynamic_cast<const RangeError*>(&e))
    return kIo;
  if (dynamic_cast<const DegenerateDatasetError*>(&e) || dynamic_cast<const EmptyInstanceError*>(&e) ||
      dynamic_cast<const UndefinedMetricError*>(&e))
    return kDegenerate;
  if (dynamic_cast<const ShapeError*>(&e)) return kDimension;
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guide functions, guided encodings and leaf segmentation metrics", "glk"};
  app.require_subcommand(1);
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.config_formatter(std::make_shared<cli::JsonConfig>(&app));
  app.allow_config_extras(false);

  SynthArgs synth;
  CLI::App* c_synth = subcommand(app, "synth", "Generate a synthetic rosette dataset");
  c_synth->add_option("--count", synth.count, "Number of plants")->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "Dataset seed")->capture_default_str();
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_flag("--no-occlusion", synth.no_occlusion, "Never let outer leaves cover inner ones");
  add_rosette_flags(c_synth, synth.rosette);

  TrainArgs train;
  CLI::App* c_train = subcommand(app, "train-guides", "Fit harmonic guide functions to a labelled dataset");
  c_train->add_option("--manifest", train.manifest, "Dataset manifest")->required();
  c_train->add_option("--out", train.out, "Output directory for guidebank.json and loss.csv")->required();
  c_train->add_option("--d-g", train.d_g, "Number of guide functions (even)")->capture_default_str();
  c_train->add_option("--epsilon", train.epsilon, "Hinge margin")->capture_default_str();
  c_train->add_option("--lr", train.train.learning_rate, "AdamW learning rate")->capture_default_str();
  c_train->add_option("--epochs", train.train.epochs, "Training epochs")->capture_default_str();
  c_train->add_option("--seed", train.train.seed, "Initialisation seed")->capture_default_str();
  c_train->add_option("--weight-decay", train.train.weight_decay, "Decoupled weight decay")->capture_default_str();

  EmbedArgs embed;
  CLI::App* c_embed = subcommand(app, "embed", "Write guided embeddings of every instance as CSV");
  c_embed->add_option("--guides", embed.guides, "guidebank.json")->required();
  c_embed->add_option("--labels", embed.labels, "Label map PGM files");
  c_embed->add_option("--manifest", embed.manifest, "Dataset manifest");
  c_embed->add_option("--out", embed.out, "CSV path (stdout when omitted)");

  EvalArgs eval;
  CLI::App* c_eval = subcommand(app, "eval", "Score predicted label maps against ground truth");
  c_eval->add_option("--pred", eval.pred, "Prediction manifest")->required();
  c_eval->add_option("--gt", eval.gt, "Ground-truth manifest")->required();
  c_eval->add_option("--out", eval.out, "Output directory for metrics.json and metrics.csv")->required();
  c_eval->add_option("--sizes", eval.sizes, "Size-stratified report")
      ->check(CLI::IsMember({"msu", "komatsuna", "custom"}));
  c_eval->add_option("--small-max", eval.small_max, "Largest small leaf area (custom sizes)");
  c_eval->add_option("--medium-max", eval.medium_max, "Largest medium leaf area (custom sizes)");

  PerturbArgs pert;
  CLI::App* c_pert = subcommand(app, "perturb", "Derive imperfect predictions from ground-truth label maps");
  c_pert->add_option("--manifest", pert.manifest, "Ground-truth manifest")->required();
  c_pert->add_option("--out", pert.out, "Output directory")->required();
  c_pert->add_option("--drop", pert.spec.drop_prob, "Per-instance drop probability")->capture_default_str();
  c_pert->add_option("--merge", pert.spec.merge_prob, "Per-adjacent-pair merge probability")->capture_default_str();
  c_pert->add_option("--radius", pert.spec.boundary_radius, "Boundary erosion/dilation radius")->capture_default_str();
  c_pert->add_option("--seed", pert.spec.seed, "Perturbation seed")->capture_default_str();

  GpeArgs gpe_args;
  CLI::App* c_gpe = subcommand(app, "gpe", "Dump the guided positional encoding of an h x w grid");
  c_gpe->set_help_flag("--help", "Print this help message and exit");  // frees -h for the grid height
  c_gpe->add_option("--guides", gpe_args.guides, "guidebank.json")->required();
  c_gpe->add_option("--h", gpe_args.h, "Grid height")->required();
  c_gpe->add_option("--w", gpe_args.w, "Grid width")->required();
  c_gpe->add_option("--d-p", gpe_args.d_p, "Encoding depth")->capture_default_str();
  c_gpe->add_option("--out", gpe_args.out, "Output file")->required();

  GdpqArgs gd;
  CLI::App* c_gdpq = subcommand(app, "gdpq-demo", "Guided dynamic positional queries for a mask stack");
  c_gdpq->add_option("--guides", gd.guides, "guidebank.json")->required();
  c_gdpq->add_option("--masks", gd.masks, "One PGM per mask layer, in query order")->required();
  c_gdpq->add_option("--seed", gd.seed, "MLP initialisation seed")->capture_default_str();
  c_gdpq->add_flag("--binarize", gd.binarize, "Threshold masks at 0.5 first");
  c_gdpq->add_option("--d-out", gd.d_out, "Query width")->capture_default_str();
  c_gdpq->add_option("--hidden", gd.hidden, "MLP hidden width (defaults to the query width)");
  c_gdpq->add_option("--out", gd.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (c_synth->parsed()) return run_synth(synth);
    if (c_train->parsed()) return run_train(train);
    if (c_embed->parsed()) return run_embed(embed);
    if (c_eval->parsed()) return run_eval(eval);
    if (c_pert->parsed()) return run_perturb(pert);
    if (c_gpe->parsed()) return run_gpe(gpe_args);
    if (c_gdpq->parsed()) return run_gdpq(gd);
  } catch (const ExitError& e) {
    std::cerr << "glk: " << e.message << "\n";
    if (e.code == kUsage) std::cerr << "run 'glk --help' for usage\n";
    return e.code;
  } catch (const std::exception& e) {
    const int rc = exit_code_for(e);
    std::cerr << "glk: " << e.what() << "\n";
    if (rc == kUsage) std::cerr << "run 'glk --help' for usage\n";
    return rc;
  }
  return kUsage;
}
