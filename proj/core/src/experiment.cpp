#include "kol/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>

#include "kol/fbp.hpp"
#include "kol/fft.hpp"
#include "kol/filter.hpp"
#include "kol/image_io.hpp"
#include "kol/losses.hpp"
#include "kol/metrics.hpp"
#include "kol/mlp.hpp"
#include "kol/rebin.hpp"
#include "kol/tensor_ops.hpp"

namespace kol {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Strict reader: every key must be consumed, types are checked.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  Reader sub(const std::string& key) const {
    seen_.insert(key);
    return Reader(j_.at(key), path_.empty() ? key : path_ + "." + key);
  }

  template <class T>
  void opt(const std::string& key, T& out) const {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    out = convert<T>(j_.at(key), name(key));
  }

  template <class T>
  T req(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError("missing required key '" + name(key) + "'");
    seen_.insert(key);
    return convert<T>(j_.at(key), name(key));
  }

  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + name(key) + "'");
    }
  }

  std::map<std::string, double> numbers(const std::string& key) const {
    const Reader r = sub(key);
    std::map<std::string, double> out;
    for (const auto& [k, v] : r.j_.items()) out[k] = convert<double>(v, r.name(k));
    return out;
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  template <class T>
  static T convert(const json& v, const std::string& name) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("'" + name + "' must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("'" + name + "' must be a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ConfigError("'" + name + "' must be finite");
      return d;
    } else if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) throw ConfigError("'" + name + "' must be a non-negative integer");
      return static_cast<T>(v.get<std::uint64_t>());
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("'" + name + "' must be a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw ConfigError("'" + name + "' must be an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], name + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
  }

  const json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void read_fan(const Reader& r, FanSetup& f) {
  r.opt("size", f.size);
  r.opt("spacing", f.spacing);
  r.opt("dsi", f.dsi);
  r.opt("dsd", f.dsd);
  r.opt("views", f.views);
  r.opt("detector_spacing", f.detector_spacing);
  r.done();
  require(f.size >= 4, "'" + r.name("size") + "' must be >= 4");
  require(f.views >= 2, "'" + r.name("views") + "' must be >= 2");
}

void read_split(const Reader& r, Split& s) {
  r.opt("train", s.train);
  r.opt("val", s.val);
  r.opt("test", s.test);
  r.done();
  require(s.train >= 1 && s.val >= 1 && s.test >= 1, "'" + r.name("train/val/test") + "' must all be >= 1");
}

void read_optimizer(const Reader& r, OptimizerConfig& o) {
  std::string kind = to_string(o.kind);
  r.opt("kind", kind);
  try {
    o.kind = optimizer_kind_from_string(kind);
  } catch (const ArgumentError& e) {
    throw ConfigError("'" + r.name("kind") + "': " + e.what());
  }
  r.opt("learning_rate", o.learning_rate);
  r.opt("momentum", o.momentum);
  r.opt("beta1", o.beta1);
  r.opt("beta2", o.beta2);
  r.opt("epsilon", o.epsilon);
  if (r.has("lr_scale")) o.lr_scale = r.numbers("lr_scale");
  r.done();
}

void read_training(const Reader& r, TrainConfig& t) {
  r.opt("epochs", t.epochs);
  r.opt("batch_size", t.batch_size);
  r.opt("shuffle", t.shuffle);
  r.opt("keep_best", t.keep_best);
  if (r.has("optimizer")) read_optimizer(r.sub("optimizer"), t.optimizer);
  r.done();
  require(t.epochs >= 1, "'" + r.name("epochs") + "' must be >= 1");
}

template <class Fn>
void wrap(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

FanBeamGeometry make_fan(const FanSetup& f) {
  const ImageGrid grid{f.size, f.size, f.spacing};
  return FanBeamGeometry::short_scan(grid, f.dsi, f.dsd, f.views,
                                     FanBeamGeometry::covering_detector(grid, f.dsi, f.dsd, f.detector_spacing),
                                     f.detector_spacing);
}

FanBeamGeometry limited_fan(const TrainCtConfig& c) {
  const double deg = std::numbers::pi / 180.0;
  return make_fan(c.geometry).without_wedge(c.wedge_start_deg * deg, c.wedge_width_deg * deg);
}

RebinConfig make_rebin(const TrainRebinConfig& c) {
  RebinConfig rc = make_rebin_config({c.size, c.size, 1.0}, c.parallel_views, c.fan_views, c.dsi, c.dsd,
                                     c.detector_spacing);
  rc.train_c = c.train_c;
  rc.train_w = c.train_w;
  return rc;
}

FbpReconstructConfig parse_fbp(const Reader& r) {
  FbpReconstructConfig c;
  std::string phantom = to_string(c.phantom);
  r.opt("phantom", phantom);
  wrap([&] { c.phantom = phantom_kind_from_string(phantom); });
  require(c.phantom != PhantomKind::tubes, "'phantom' must be an ellipse phantom (shepp-logan or random-ellipses)");
  if (r.has("geometry")) read_fan(r.sub("geometry"), c.geometry);
  r.opt("parker", c.parker);
  r.opt("roi_fraction", c.roi_fraction);
  r.opt("compare_without_parker", c.compare_without_parker);
  require(c.roi_fraction > 0.0 && c.roi_fraction <= 1.0, "'roi_fraction' must lie in (0, 1]");
  wrap([&] { make_fan(c.geometry).validate(); });
  return c;
}

TrainCtConfig parse_ct(const Reader& r) {
  TrainCtConfig c;
  if (r.has("geometry")) read_fan(r.sub("geometry"), c.geometry);
  if (r.has("wedge")) {
    const Reader w = r.sub("wedge");
    w.opt("start_deg", c.wedge_start_deg);
    w.opt("width_deg", c.wedge_width_deg);
    w.done();
    require(c.wedge_width_deg >= 0.0, "'wedge.width_deg' must be >= 0");
  }
  if (r.has("phantoms")) {
    const Reader p = r.sub("phantoms");
    p.opt("ellipses", c.ellipses);
    p.opt("train", c.phantoms.train);
    p.opt("val", c.phantoms.val);
    p.opt("test", c.phantoms.test);
    p.done();
    require(c.phantoms.train >= 1 && c.phantoms.val >= 1 && c.phantoms.test >= 1, "'phantoms' splits must be >= 1");
  }
  if (r.has("training")) read_training(r.sub("training"), c.training);
  wrap([&] {
    limited_fan(c).validate();
    c.training.optimizer.validate();
  });
  return c;
}

TrainFrangiConfig parse_frangi(const Reader& r) {
  TrainFrangiConfig c;
  r.opt("size", c.size);
  if (r.has("tubes")) {
    const Reader t = r.sub("tubes");
    t.opt("count", c.tubes.count);
    t.opt("width_min", c.tubes.width_min);
    t.opt("width_max", c.tubes.width_max);
    t.opt("contrast", c.tubes.contrast);
    t.opt("noise_sigma", c.tubes.noise_sigma);
    t.done();
    require(c.tubes.width_min > 0.0 && c.tubes.width_max >= c.tubes.width_min, "'tubes' widths must be ordered and positive");
    require(c.tubes.noise_sigma >= 0.0, "'tubes.noise_sigma' must be >= 0");
  }
  if (r.has("images")) read_split(r.sub("images"), c.images);
  if (r.has("scales")) {
    const Reader s = r.sub("scales");
    s.opt("count", c.scales);
    s.opt("sigma_min", c.sigma_min);
    s.opt("sigma_max", c.sigma_max);
    s.opt("half_width", c.half_width);
    s.done();
  }
  r.opt("beta", c.beta);
  std::string polarity = to_string(c.polarity);
  r.opt("polarity", polarity);
  wrap([&] { c.polarity = polarity_from_string(polarity); });
  r.opt("head_trainable", c.head_trainable);
  if (r.has("training")) read_training(r.sub("training"), c.training);
  require(c.size >= 8, "'size' must be >= 8");
  wrap([&] {
    geometric_bank(c.scales, c.sigma_min, c.sigma_max, c.half_width, true).validate();
    FrangiParams p;
    p.beta = c.beta;
    p.validate();
    c.training.optimizer.validate();
  });
  return c;
}

TrainRebinConfig parse_rebin(const Reader& r) {
  TrainRebinConfig c;
  r.opt("size", c.size);
  r.opt("parallel_views", c.parallel_views);
  r.opt("fan_views", c.fan_views);
  r.opt("dsi", c.dsi);
  r.opt("dsd", c.dsd);
  r.opt("detector_spacing", c.detector_spacing);
  if (r.has("phantoms")) read_split(r.sub("phantoms"), c.phantoms);
  r.opt("include_shepp_logan", c.include_shepp_logan);
  r.opt("train_c", c.train_c);
  r.opt("train_w", c.train_w);
  if (r.has("training")) read_training(r.sub("training"), c.training);
  require(c.size >= 4, "'size' must be >= 4");
  require(c.train_c || c.train_w, "at least one of 'train_c' and 'train_w' must be true");
  wrap([&] {
    make_rebin(c);
    c.training.optimizer.validate();
  });
  return c;
}

BoundsSuiteConfig parse_bounds(const Reader& r) {
  BoundsSuiteConfig c;
  r.opt("resolution", c.resolution);
  r.opt("nodes_u", c.nodes_u);
  r.opt("nodes_g", c.nodes_g);
  r.opt("chain_nodes", c.chain_nodes);
  r.opt("norms", c.norms);
  if (r.has("fit")) {
    const Reader f = r.sub("fit");
    std::string act = to_string(c.fit.activation);
    f.opt("activation", act);
    wrap([&] { c.fit.activation = activation_from_string(act); });
    f.opt("steps", c.fit.steps);
    f.opt("learning_rate", c.fit.learning_rate);
    f.opt("train_resolution", c.fit.train_resolution);
    f.opt("eval_resolution", c.fit.eval_resolution);
    f.opt("ridge", c.fit.ridge);
    f.opt("restarts", c.fit.restarts);
    f.done();
  }
  if (r.has("scaling")) {
    const Reader s = r.sub("scaling");
    s.opt("nodes", c.scaling_nodes);
    s.opt("seeds", c.scaling_seeds);
    s.done();
  }
  wrap([&] { c.validate(); });
  return c;
}

GradcheckSuiteConfig parse_gradcheck(const Reader& r) {
  GradcheckSuiteConfig c;
  r.opt("targets", c.targets);
  r.opt("tolerance", c.tolerance);
  r.opt("max_entries", c.max_entries);
  require(!c.targets.empty(), "'targets' must not be empty");
  for (const auto& t : c.targets) {
    require(t == "fbp" || t == "frangi" || t == "rebin" || t == "mlp", "unknown gradcheck target '" + t + "'");
  }
  require(c.tolerance > 0.0, "'tolerance' must be positive");
  return c;
}

// Collects artifact names while writing them.
class Sink {
 public:
  explicit Sink(fs::path dir) : dir_(std::move(dir)) {}

  void text(const std::string& name, const std::string& s) {
    write_text(s, dir_ / name);
    names_.insert(name);
  }
  void json_file(const std::string& name, const json& j) {
    write_json(j, dir_ / name);
    names_.insert(name);
  }
  void image(const std::string& name, const Tensor& t, ImageFormat f) {
    export_image(t, dir_ / name, f);
    names_.insert(name);
    names_.insert(name + ".json");
  }
  std::vector<std::string> names() const { return {names_.begin(), names_.end()}; }

 private:
  fs::path dir_;
  std::set<std::string> names_;
};

class Log {
 public:
  explicit Log(const RunOptions& o) : quiet_(o.quiet), out_(o.log ? *o.log : std::cerr) {}
  template <class... A>
  void line(const char* f, A... args) {
    if (quiet_) return;
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    out_ << buf << '\n';
  }

 private:
  bool quiet_;
  std::ostream& out_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::function<void(const EpochRecord&)> epoch_logger(Log& log) {
  return [&log](const EpochRecord& r) { log.line("epoch %zu %s loss %.6g", r.epoch, r.split.c_str(), r.loss); };
}

TrainResult train_saving_checkpoint(Graph& graph, const std::vector<Example>& train, const std::vector<Example>& val,
                                    const LossFn& loss, const TrainConfig& tc, Log& log, Sink& sink) {
  try {
    return train_loop(graph, train, val, loss, tc, {}, epoch_logger(log));
  } catch (const TrainingDiverged& e) {
    sink.text("history.csv", history_csv(e.history));
    for (const auto& [name, value] : e.checkpoint) sink.image("checkpoint_" + name + ".raw", value, ImageFormat::raw_f32);
    throw;
  }
}

Tensor halfcomplex_row(const Tensor& params) { return params.reshaped({params.size()}); }

void run_fbp(const FbpReconstructConfig& c, std::uint64_t seed, Sink& sink, ExperimentResult& res, Log& log) {
  const FanBeamGeometry g = make_fan(c.geometry);
  PhantomSpec spec;
  spec.kind = c.phantom;
  spec.grid = g.grid;
  spec.seed = derive_seed(seed, 1);
  const Phantom ph = generate_phantom(spec);
  const Tensor sino = analytic_sinogram(ph.ellipses, g);
  const FilterKernel k = ramp_filter(g);
  const double radius = c.roi_fraction * 0.5 * static_cast<double>(c.geometry.size) * c.geometry.spacing;
  const Tensor recon = fbp_reconstruct(sino, g, analytic_fbp_weights(g, c.parker), k);
  res.metrics["roi_rmse"] = roi_relative_rmse(recon, ph.image, g.grid, radius);
  log.line("roi relative rmse %.6f", res.metrics["roi_rmse"]);
  if (c.compare_without_parker) {
    const Tensor plain = fbp_reconstruct(sino, g, analytic_fbp_weights(g, !c.parker), k);
    res.metrics[c.parker ? "roi_rmse_without_parker" : "roi_rmse_with_parker"] =
        roi_relative_rmse(plain, ph.image, g.grid, radius);
  }
  res.metrics["views"] = static_cast<double>(g.n_angles());
  res.metrics["detector_bins"] = static_cast<double>(g.n_det);
  sink.image("reconstruction.pgm", recon, ImageFormat::pgm16);
  sink.image("reconstruction.raw", recon, ImageFormat::raw_f32);
  sink.image("phantom.pgm", ph.image, ImageFormat::pgm16);
  sink.image("sinogram.raw", sino, ImageFormat::raw_f32);
}

void run_ct(const TrainCtConfig& c, std::uint64_t seed, Sink& sink, ExperimentResult& res, Log& log) {
  const FanBeamGeometry full = make_fan(c.geometry);
  const FanBeamGeometry lim = limited_fan(c);
  log.line("views %zu of %zu after the wedge, %zu detector bins", lim.n_angles(), full.n_angles(), full.n_det);
  PhantomSpec spec;
  spec.kind = PhantomKind::random_ellipses;
  spec.grid = full.grid;
  spec.seed = derive_seed(seed, 1);
  spec.ellipses.count = c.ellipses;
  const auto phantoms = generate_phantoms(spec, c.phantoms.total());
  const WeightImage wf = analytic_fbp_weights(full);
  const FilterKernel kf = ramp_filter(full);
  std::vector<Example> train, val, test;
  for (std::size_t i = 0; i < phantoms.size(); ++i) {
    Example ex{{{FbpNetwork::kInput, analytic_sinogram(phantoms[i].ellipses, lim)}},
               fbp_reconstruct(analytic_sinogram(phantoms[i].ellipses, full), full, wf, kf)};
    (i < c.phantoms.train ? train : i < c.phantoms.train + c.phantoms.val ? val : test).push_back(std::move(ex));
  }
  FbpNetwork net = fbp_network(lim);
  const Tensor w0 = net.weights().values;
  std::vector<Tensor> before;
  res.metrics["test_mse_initial"] = evaluate_loss(net.graph, test, loss_mse, &before);
  TrainConfig tc = c.training;
  tc.seed = derive_seed(seed, 2);
  const TrainResult tr = train_saving_checkpoint(net.graph, train, val, loss_mse, tc, log, sink);
  std::vector<Tensor> after;
  res.metrics["test_mse_final"] = evaluate_loss(net.graph, test, loss_mse, &after);
  res.metrics["test_mse_ratio"] = res.metrics["test_mse_final"] / res.metrics["test_mse_initial"];
  res.metrics["best_epoch"] = static_cast<double>(tr.best_epoch);
  res.metrics["trainable_parameters"] = static_cast<double>(net.graph.trainable_scalar_count());
  res.metrics["views"] = static_cast<double>(lim.n_angles());
  log.line("held-out mse %.6g -> %.6g (ratio %.4f)", res.metrics["test_mse_initial"], res.metrics["test_mse_final"],
           res.metrics["test_mse_ratio"]);
  sink.text("history.csv", history_csv(tr.history));
  sink.image("weights_initial.pgm", w0, ImageFormat::pgm16);
  sink.image("weights.pgm", net.weights().values, ImageFormat::pgm16);
  sink.image("weights.raw", net.weights().values, ImageFormat::raw_f32);
  sink.image("filter.raw", halfcomplex_row(net.graph.parameter_value(FbpNetwork::kFilter)), ImageFormat::raw_f32);
  sink.image("test0_target.pgm", test.front().target, ImageFormat::pgm16);
  sink.image("test0_initial.pgm", before.front(), ImageFormat::pgm16);
  sink.image("test0_trained.pgm", after.front(), ImageFormat::pgm16);
}

double pixel_auc(const std::vector<Tensor>& preds, const std::vector<Example>& data) {
  std::vector<double> s, l;
  for (std::size_t i = 0; i < data.size(); ++i) {
    s.insert(s.end(), preds[i].values().begin(), preds[i].values().end());
    l.insert(l.end(), data[i].target.values().begin(), data[i].target.values().end());
  }
  const std::size_t n = s.size();
  return roc_auc(Tensor({n}, std::move(s)), Tensor({n}, std::move(l)));
}

double mean_dice(const std::vector<Tensor>& preds, const std::vector<Example>& data) {
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) sum += dice_coefficient(preds[i], data[i].target);
  return sum / static_cast<double>(data.size());
}

void run_frangi(const TrainFrangiConfig& c, std::uint64_t seed, Sink& sink, ExperimentResult& res, Log& log) {
  PhantomSpec spec;
  spec.kind = PhantomKind::tubes;
  spec.grid = {c.size, c.size, 1.0};
  spec.seed = derive_seed(seed, 1);
  spec.tubes = c.tubes;
  const auto images = generate_phantoms(spec, c.images.total());
  FrangiParams params;
  params.beta = c.beta;
  params.polarity = c.polarity;
  const ScaleBank bank = geometric_bank(c.scales, c.sigma_min, c.sigma_max, c.half_width, true);
  if (c.head_trainable) {
    // start the trainable c where the automatic rule would put it on the first training image
    double frob = 0.0;
    const Tensor norm = normalize_image(images.front().image);
    for (std::size_t s = 0; s < bank.size(); ++s) frob = std::max(frob, max_frobenius(hessian(norm, bank, s)));
    params.c = frob > 0.0 ? 0.5 * frob : 1.0;
  }
  FrangiNetwork net = frangi_network(bank, params, c.head_trainable);
  std::vector<Example> train, val, test;
  for (std::size_t i = 0; i < images.size(); ++i) {
    Example ex{net.bind(images[i].image), *images[i].mask};
    (i < c.images.train ? train : i < c.images.train + c.images.val ? val : test).push_back(std::move(ex));
  }
  const LossFn loss = [](const Tensor& p, const Tensor& m) { return loss_dice(p, m); };
  std::vector<Tensor> before, after;
  evaluate_loss(net.graph, test, loss, &before);
  res.metrics["auc_fixed"] = pixel_auc(before, test);
  res.metrics["dice_fixed"] = mean_dice(before, test);
  log.line("fixed-filter pixel auc %.4f", res.metrics["auc_fixed"]);
  TrainConfig tc = c.training;
  tc.seed = derive_seed(seed, 2);
  const TrainResult tr = train_saving_checkpoint(net.graph, train, val, loss, tc, log, sink);
  evaluate_loss(net.graph, test, loss, &after);
  res.metrics["auc_trained"] = pixel_auc(after, test);
  res.metrics["dice_trained"] = mean_dice(after, test);
  res.metrics["auc_gain"] = res.metrics["auc_trained"] - res.metrics["auc_fixed"];
  res.metrics["trainable_parameters"] = static_cast<double>(frangi_param_count(bank, c.head_trainable));
  res.metrics["best_epoch"] = static_cast<double>(tr.best_epoch);
  log.line("trained pixel auc %.4f (gain %+.4f)", res.metrics["auc_trained"], res.metrics["auc_gain"]);
  sink.text("history.csv", history_csv(tr.history));
  sink.image("test0_image.pgm", images[c.images.train + c.images.val].image, ImageFormat::pgm16);
  sink.image("test0_mask.pgm", test.front().target, ImageFormat::pgm16);
  sink.image("test0_fixed.pgm", before.front(), ImageFormat::pgm16);
  sink.image("test0_trained.pgm", after.front(), ImageFormat::pgm16);
  const std::size_t mid = bank.size() / 2;
  for (const char* which : {"xx", "xy", "yy"}) {
    const std::string name = FrangiNetwork::kernel_name(which, mid);
    sink.image(name + ".raw", net.graph.parameter_value(name), ImageFormat::raw_f32);
  }
}

void run_rebin(const TrainRebinConfig& c, std::uint64_t seed, Sink& sink, ExperimentResult& res, Log& log) {
  const RebinConfig rc = make_rebin(c);
  PhantomSpec spec;
  spec.kind = PhantomKind::random_ellipses;
  spec.grid = rc.parallel.grid;
  spec.seed = derive_seed(seed, 1);
  const auto phantoms = generate_phantoms(spec, c.phantoms.total());
  std::vector<Tensor> images;
  for (const auto& p : phantoms) images.push_back(p.image);
  if (c.include_shepp_logan) {
    PhantomSpec sl;
    sl.grid = rc.parallel.grid;
    images.push_back(generate_phantom(sl).image);
  }
  const auto all = rebin_examples(images, rc);
  std::vector<Example> train(all.begin(), all.begin() + c.phantoms.train);
  std::vector<Example> val(all.begin() + c.phantoms.train, all.begin() + c.phantoms.train + c.phantoms.val);
  std::vector<Example> test(all.begin() + c.phantoms.train + c.phantoms.val, all.end());
  RebinNetwork net = rebin_network(rc);
  std::vector<Tensor> before, after;
  res.metrics["test_mse_initial"] = evaluate_loss(net.graph, test, loss_mse, &before);
  TrainConfig tc = c.training;
  tc.seed = derive_seed(seed, 2);
  const TrainResult tr = train_saving_checkpoint(net.graph, train, val, loss_mse, tc, log, sink);
  res.metrics["test_mse_final"] = evaluate_loss(net.graph, test, loss_mse, &after);
  res.metrics["test_mse_ratio"] = res.metrics["test_mse_final"] / res.metrics["test_mse_initial"];
  res.metrics["best_epoch"] = static_cast<double>(tr.best_epoch);
  res.metrics["trainable_parameters"] = static_cast<double>(net.graph.trainable_scalar_count());
  log.line("held-out mse %.6g -> %.6g (ratio %.4f)", res.metrics["test_mse_initial"], res.metrics["test_mse_final"],
           res.metrics["test_mse_ratio"]);

  // invariants of the trained pipeline
  const Tensor& xa = test.front().inputs.at(RebinNetwork::kInput);
  const Tensor& xb = test.back().inputs.at(RebinNetwork::kInput);
  const double alpha = 0.7, beta = -1.3;
  const Tensor mixed = add(scale(xa, Complex(alpha)), scale(xb, Complex(beta)));
  const Tensor lhs = net.forward(mixed);
  const Tensor rhs = add(scale(net.forward(xa), alpha), scale(net.forward(xb), beta));
  res.metrics["linearity_error"] = norm(sub(lhs, rhs), NormKind::l2) / norm(rhs, NormKind::l2);
  const auto spectrum = net.spectrum();
  Tensor filtered = xa;
  auto fv = filtered.cvalues();
  for (std::size_t i = 0; i < fv.size(); ++i) fv[i] *= spectrum[i % spectrum.size()];
  const Tensor rows = inverse_dft(filtered, 1);
  res.metrics["reality_residue"] =
      norm(rows.imag_part(), NormKind::inf) / std::max(norm(rows.real_part(), NormKind::inf), 1e-300);

  sink.text("history.csv", history_csv(tr.history));
  sink.image("weights.pgm", net.weights(), ImageFormat::pgm16);
  sink.image("weights.raw", net.weights(), ImageFormat::raw_f32);
  sink.image("filter.raw", halfcomplex_row(net.graph.parameter_value(RebinNetwork::kFilter)), ImageFormat::raw_f32);
  sink.image("test_last_reference.pgm", test.back().target, ImageFormat::pgm16);
  sink.image("test_last_initial.pgm", before.back(), ImageFormat::pgm16);
  sink.image("test_last_trained.pgm", after.back(), ImageFormat::pgm16);
}

void run_bounds(const BoundsSuiteConfig& c, std::uint64_t seed, Sink& sink, ExperimentResult& res, Log& log) {
  const BoundsSuite suite = run_bounds_suite(c, seed);
  std::size_t passed = 0;
  for (const auto& r : suite.reports) {
    passed += r.pass ? 1 : 0;
    log.line("theorem %-2s %-36s p=%-3g sup|e_f| %.3e  bound %.3e  %s", r.theorem.c_str(), r.subject.c_str(), r.p,
             r.sup_error, r.bound, r.pass ? "PASS" : "FAIL");
  }
  res.metrics["reports_total"] = static_cast<double>(suite.reports.size());
  res.metrics["reports_passed"] = static_cast<double>(passed);
  res.metrics["substitutions_strict"] = suite.substitutions_strict ? 1.0 : 0.0;
  res.metrics["known_zero"] = suite.known_zero ? 1.0 : 0.0;
  res.metrics["lipschitz_product_holds"] = suite.product.holds ? 1.0 : 0.0;
  res.metrics["scaling_monotone"] = suite.scaling_monotone ? 1.0 : 0.0;
  for (const auto& row : suite.scaling) res.metrics["scaling_median_n" + std::to_string(row.nodes)] = row.median;
  res.report = suite.to_json();
  sink.json_file("bounds.json", res.report);
  sink.text("bounds.csv", suite.reports_csv());
  sink.text("scaling.csv", suite.scaling_csv());
}

void run_gradcheck(const GradcheckSuiteConfig& c, std::uint64_t seed, Sink& sink, ExperimentResult& res, Log& log) {
  json out = json::array();
  for (const auto& t : gradcheck_suite(c, seed)) {
    res.metrics["max_rel_error_" + t.name] = t.report.max_rel_error();
    res.metrics["pass_" + t.name] = t.report.pass ? 1.0 : 0.0;
    log.line("gradcheck %-8s max rel error %.3e  %s", t.name.c_str(), t.report.max_rel_error(),
             t.report.pass ? "PASS" : "FAIL");
    out.push_back({{"target", t.name}, {"report", t.report.to_json()}});
  }
  res.report = out;
  sink.json_file("gradcheck.json", out);
}

}  // namespace

TrainCtConfig::TrainCtConfig() {
  training.epochs = 30;
  training.batch_size = 4;
  training.optimizer.learning_rate = 1e-2;
}

TrainFrangiConfig::TrainFrangiConfig() {
  tubes.noise_sigma = 0.25;
  training.epochs = 10;
  training.batch_size = 8;
  training.optimizer.learning_rate = 1e-4;
}

TrainRebinConfig::TrainRebinConfig() {
  training.epochs = 30;
  training.batch_size = 4;
  training.optimizer.learning_rate = 3e-2;
  training.optimizer.lr_scale[RebinNetwork::kFilter] = 0.01;
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "fbp-reconstruct") return ExperimentKind::fbp_reconstruct;
  if (s == "train-ct") return ExperimentKind::train_ct;
  if (s == "train-frangi") return ExperimentKind::train_frangi;
  if (s == "train-rebin") return ExperimentKind::train_rebin;
  if (s == "verify-bounds") return ExperimentKind::verify_bounds;
  if (s == "gradcheck") return ExperimentKind::gradcheck;
  throw ConfigError("unknown experiment '" + s + "'");
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::fbp_reconstruct: return "fbp-reconstruct";
    case ExperimentKind::train_ct: return "train-ct";
    case ExperimentKind::train_frangi: return "train-frangi";
    case ExperimentKind::train_rebin: return "train-rebin";
    case ExperimentKind::verify_bounds: return "verify-bounds";
    case ExperimentKind::gradcheck: return "gradcheck";
  }
  return "?";
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  const Reader r(j, "");
  ExperimentConfig c;
  c.source = j;
  c.kind = experiment_kind_from_string(r.req<std::string>("experiment"));
  r.opt("seed", c.seed);
  if (r.has("output")) c.output = r.req<std::string>("output");
  switch (c.kind) {
    case ExperimentKind::fbp_reconstruct: c.body = parse_fbp(r); break;
    case ExperimentKind::train_ct: c.body = parse_ct(r); break;
    case ExperimentKind::train_frangi: c.body = parse_frangi(r); break;
    case ExperimentKind::train_rebin: c.body = parse_rebin(r); break;
    case ExperimentKind::verify_bounds: c.body = parse_bounds(r); break;
    case ExperimentKind::gradcheck: c.body = parse_gradcheck(r); break;
  }
  r.done();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::uint64_t config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string metrics_csv(const std::map<std::string, double>& metrics) {
  std::string out = "name,value\n";
  for (const auto& [k, v] : metrics) out += k + "," + fmt(v) + "\n";
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                const RunOptions& options) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  Sink sink(out_dir);
  Log log(options);
  ExperimentResult res;
  const auto t0 = Clock::now();
  log.line("%s, seed %llu", to_string(cfg.kind).c_str(), static_cast<unsigned long long>(cfg.seed));
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, FbpReconstructConfig>) run_fbp(body, cfg.seed, sink, res, log);
        if constexpr (std::is_same_v<T, TrainCtConfig>) run_ct(body, cfg.seed, sink, res, log);
        if constexpr (std::is_same_v<T, TrainFrangiConfig>) run_frangi(body, cfg.seed, sink, res, log);
        if constexpr (std::is_same_v<T, TrainRebinConfig>) run_rebin(body, cfg.seed, sink, res, log);
        if constexpr (std::is_same_v<T, BoundsSuiteConfig>) run_bounds(body, cfg.seed, sink, res, log);
        if constexpr (std::is_same_v<T, GradcheckSuiteConfig>) run_gradcheck(body, cfg.seed, sink, res, log);
      },
      cfg.body);
  const double elapsed = seconds_since(t0);
  sink.text("metrics.csv", metrics_csv(res.metrics));
  sink.json_file("timing.json", {{"total_seconds", elapsed}});

  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg.source)));
  res.artifacts = sink.names();
  write_json({{"experiment", to_string(cfg.kind)},
              {"seed", cfg.seed},
              {"config_hash", hash},
              {"config", cfg.source},
              {"artifacts", res.artifacts}},
             out_dir / "manifest.json");
  res.artifacts.push_back("manifest.json");
  log.line("done in %.1f s, %zu artifacts in %s", elapsed, res.artifacts.size(), out_dir.string().c_str());
  return res;
}

std::vector<GradcheckTarget> gradcheck_suite(const GradcheckSuiteConfig& cfg, std::uint64_t seed) {
  std::vector<GradcheckTarget> out;
  GradcheckOptions opt;
  opt.tolerance = cfg.tolerance;
  opt.max_entries = cfg.max_entries;
  opt.seed = derive_seed(seed, 7);
  for (const auto& target : cfg.targets) {
    if (target == "fbp") {
      const ImageGrid grid{16, 16, 1.0};
      const auto g = FanBeamGeometry::short_scan(grid, 40.0, 80.0, 24, FanBeamGeometry::covering_detector(grid, 40.0, 80.0, 2.0), 2.0);
      std::mt19937_64 rng(derive_seed(seed, 11));
      const Tensor p = analytic_sinogram(random_ellipses(grid, 3, rng), g);
      FbpNetwork net = fbp_network(g);
      const Tensor y = net.reconstruct(p);
      const double top = max_value(y);
      Tensor mask(y.shape());
      for (std::size_t i = 0; i < y.size(); ++i) mask[i] = y[i] > 1e-3 * top ? 1.0 : 0.0;
      GradcheckOptions o = opt;
      o.output_mask = mask;
      out.push_back({"fbp", gradcheck(net.graph, {{FbpNetwork::kInput, p}}, o)});
    } else if (target == "frangi") {
      PhantomSpec spec;
      spec.kind = PhantomKind::tubes;
      spec.grid = {24, 24, 1.0};
      spec.seed = derive_seed(seed, 12);
      const Phantom ph = generate_phantom(spec);
      FrangiParams params;
      params.c = 0.2;
      FrangiNetwork net = frangi_network(geometric_bank(3, 1.0, 2.0, 3.0, true), params, true);
      out.push_back({"frangi", gradcheck(net.graph, net.bind(ph.image), opt)});
    } else if (target == "rebin") {
      const RebinConfig rc = make_rebin_config({16, 16, 1.0}, 5, 12, 32.0, 64.0, 2.0);
      std::mt19937_64 rng(derive_seed(seed, 13));
      const Tensor img = rasterize(random_ellipses(rc.parallel.grid, 3, rng), rc.parallel.grid, 2);
      RebinNetwork net = rebin_network(rc);
      std::mt19937_64 wr(derive_seed(seed, 14));
      Tensor w = net.weights();
      for (auto& v : w.values()) v = uniform(wr, 0.5, 1.5);
      net.graph.set_parameter(RebinNetwork::kWeights, w);
      out.push_back({"rebin", gradcheck(net.graph, {{RebinNetwork::kInput, make_kspace(img, rc)}}, opt)});
    } else if (target == "mlp") {
      MlpNetwork net = mlp_network(random_mlp(2, 6, derive_seed(seed, 15)));
      const Box box{{-1.0, -1.0}, {1.0, 1.0}};
      out.push_back({"mlp", gradcheck(net.graph, {{MlpNetwork::kInput, design_matrix(box.grid(5))}}, opt)});
    } else {
      throw ArgumentError("unknown gradcheck target '" + target + "'");
    }
  }
  return out;
}

}  // namespace kol
