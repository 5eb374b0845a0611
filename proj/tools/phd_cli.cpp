#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "phd/adapt.hpp"
#include "phd/bounds.hpp"
#include "phd/data.hpp"
#include "phd/discrepancy.hpp"
#include "phd/error.hpp"
#include "phd/experiments.hpp"
#include "phd/models.hpp"
#include "phd/report.hpp"
#include "phd/semisup.hpp"
#include "phd/tritrain.hpp"

namespace fs = std::filesystem;
using namespace phd;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  int jobs = 0;
};

// Resolved option values of an app level, keyed by long name.
Json option_values(const CLI::App& app) {
  Json j = Json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    const auto& res = opt->results();
    if (opt->get_items_expected_max() > 1) {
      j[name] = res.empty() ? Json(opt->get_default_str()) : Json(res);
    } else if (!res.empty()) {
      j[name] = res.back();
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

class Emitter {
 public:
  Emitter(const Globals& g, Json config) : g_(g), config_(std::move(config)) {}

  void emit(const std::string& name, const std::string& command, Json result,
            const std::optional<Table>& table = std::nullopt) const {
    std::string text;
    std::string ext = "json";
    if (g_.format == "csv" && table) {
      text = to_csv(*table);
      ext = "csv";
    } else {
      text = dump(envelope(command, config_, std::move(result)));
    }
    write(name + "." + ext, text);
  }

  void write(const std::string& file, const std::string& text) const {
    if (g_.out.empty()) {
      std::cout << text;
      return;
    }
    fs::create_directories(g_.out);
    const fs::path p = fs::path(g_.out) / file;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    f << text;
  }

  std::string path(const std::string& file) const {
    if (g_.out.empty()) throw ConfigError("this command needs --out");
    fs::create_directories(g_.out);
    return (fs::path(g_.out) / file).string();
  }

  bool to_dir() const { return !g_.out.empty(); }

 private:
  const Globals& g_;
  Json config_;
};

// CSV by default; "images.idx[:labels.idx]" reads IDX files.
Dataset load_data(const std::string& spec, const std::string& label_col) {
  const bool idx = spec.find(".idx") != std::string::npos || spec.find("-ubyte") != std::string::npos;
  if (idx) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) return read_idx(spec);
    return read_idx(spec.substr(0, colon), spec.substr(colon + 1));
  }
  std::ifstream in(spec);
  if (!in) throw ConfigError("cannot open '" + spec + "'");
  std::string header;
  std::getline(in, header);
  std::stringstream hs(header);
  std::string cell;
  bool has_label = false;
  while (std::getline(hs, cell, ','))
    if (cell == label_col || (cell.size() == label_col.size() + 1 && cell.back() == '\r' &&
                              cell.compare(0, label_col.size(), label_col) == 0))
      has_label = true;
  return read_csv(spec, has_label ? std::optional<std::string>(label_col) : std::nullopt);
}

struct ArchOptions {
  std::string kind = "mlp";
  std::vector<std::size_t> hidden{64, 64};
  bool bn = true;
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 1e-3;
  double wd = 0.0;

  void add(CLI::App* app) {
    app->add_option("--arch", kind, "linear | mlp")
        ->check(CLI::IsMember({"linear", "mlp"}))
        ->capture_default_str();
    app->add_option("--hidden", hidden, "hidden layer widths")->capture_default_str();
    app->add_option("--bn", bn, "batch norm in hidden layers")->capture_default_str();
    app->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    app->add_option("--batch", batch, "minibatch size")->capture_default_str();
    app->add_option("--lr", lr, "learning rate")->capture_default_str();
    app->add_option("--wd", wd, "weight decay")->capture_default_str();
  }

  Architecture arch(std::size_t d, int k) const {
    return kind == "linear" ? Architecture::linear(d, k) : Architecture::mlp(d, hidden, k, bn);
  }

  TrainConfig train(std::uint64_t seed) const {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch;
    t.learning_rate = lr;
    t.weight_decay = wd;
    t.seed = seed;
    return t;
  }
};

void require_file_option(const std::string& v, const char* name) {
  if (v.empty()) throw ConfigError(std::string("missing required option --") + name);
}

Json error_json(const std::string& kind, const std::string& message) {
  return Json{{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paired-hypotheses discrepancy toolkit"};
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.set_config("--config", "", "INI file: [section] per command, key = value");
  app.add_option("--seed", g.seed, "global seed")->capture_default_str();
  app.add_option("--out", g.out, "output directory (stdout when absent)");
  app.add_option("--format", g.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads (0 = all)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  const std::string label_col_default = "label";
  std::string label_col = label_col_default;
  app.add_option("--label-col", label_col, "CSV label column")->capture_default_str();

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic source/target pair");
  PairSpec ps;
  std::string rule = "linear";
  std::vector<double> shift;
  std::string data_format = "csv";
  gen->add_option("--rule", rule)->check(CLI::IsMember({"linear", "xor", "moons", "blobs"}));
  gen->add_option("--n", ps.n);
  gen->add_option("--d", ps.d);
  gen->add_option("--k", ps.k);
  gen->add_option("--shift", shift, "one value for every feature, or d values");
  gen->add_option("--rotate", ps.rotate, "radians in the (f0, f1) plane");
  gen->add_option("--informative", ps.informative);
  gen->add_option("--nuisance-std", ps.nuisance_std);
  gen->add_option("--blob-std", ps.blob_std);
  gen->add_option("--blob-radius", ps.blob_radius);
  gen->add_option("--layout-seed", ps.layout_seed);
  gen->add_option("--data-format", data_format)->check(CLI::IsMember({"csv", "idx"}));

  // train
  auto* train = app.add_subcommand("train", "train a hypothesis (ERM or self-training)");
  ArchOptions train_arch;
  std::string train_data, train_model, ssl_target;
  SelfTrainConfig ssl_cfg;
  train_arch.add(train);
  train->add_option("--data", train_data, "labeled training data");
  train->add_option("--model", train_model, "output model path");
  train->add_option("--ssl-target", ssl_target, "unlabeled target for self-training");
  train->add_option("--tau", ssl_cfg.tau);
  train->add_option("--ssl-rounds", ssl_cfg.rounds);
  train->add_option("--pseudo-weight", ssl_cfg.pseudo_weight);

  // phd
  auto* phd_cmd = app.add_subcommand("phd", "paired-hypotheses discrepancy on a target sample");
  std::string h1_path, h2_path, target_path, source_path;
  std::string loss_name = "zero_one";
  double rho = 1.0;
  phd_cmd->add_option("--h1", h1_path);
  phd_cmd->add_option("--h2", h2_path);
  phd_cmd->add_option("--target", target_path);
  phd_cmd->add_option("--loss", loss_name)->check(CLI::IsMember({"zero_one", "margin"}));
  phd_cmd->add_option("--rho", rho);

  // dh / sdisc / disc
  auto* dh = app.add_subcommand("dh", "H-divergence style d_H estimate");
  auto* sdisc = app.add_subcommand("sdisc", "source-guided discrepancy");
  auto* disc = app.add_subcommand("disc", "discrepancy distance (stump class, exact)");
  std::string hclass = "stump";
  std::string hs_path;
  bool held_out = false;
  std::size_t max_class = 4096;
  ArchOptions adv_arch;
  for (auto* sub : {dh, sdisc, disc}) {
    sub->add_option("--source", source_path);
    sub->add_option("--target", target_path);
  }
  for (auto* sub : {dh, sdisc}) {
    sub->add_option("--class", hclass, "stump (exact) | mlp (adversarial)")
        ->check(CLI::IsMember({"stump", "mlp"}));
    sub->add_option("--held-out", held_out, "report on held-out halves");
    adv_arch.add(sub);
  }
  sdisc->add_option("--hs", hs_path, "source hypothesis (trained when absent)");
  disc->add_option("--max-class", max_class);

  // w1
  auto* w1 = app.add_subcommand("w1", "exact empirical Wasserstein-1 distance");
  std::size_t max_points = 512;
  w1->add_option("--source", source_path);
  w1->add_option("--target", target_path);
  w1->add_option("--max-points", max_points);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "target-risk bound report");
  std::string bound_id = "thm4";
  std::string h_path, target_star_path, rad_class = "stump";
  double delta = 0.05, loss_bound = 1.0;
  std::size_t draws = 50, lemma_n = 100;
  bool two_sided = false;
  ArchOptions rad_arch;
  bounds->add_option("--bound", bound_id)
      ->check(CLI::IsMember({"lemma1", "ineq1", "ineq2", "ineq3", "thm1", "thm4", "thm6"}));
  bounds->add_option("--hyp", h_path, "hypothesis being bounded");
  bounds->add_option("--h1", h1_path);
  bounds->add_option("--h2", h2_path);
  bounds->add_option("--hs", hs_path);
  bounds->add_option("--target-star", target_star_path, "oracle target model (diagnostic)");
  bounds->add_option("--source", source_path);
  bounds->add_option("--target", target_path);
  bounds->add_option("--delta", delta);
  bounds->add_option("--draws", draws, "Rademacher draws");
  bounds->add_option("--rad-class", rad_class, "stump | fit")->check(CLI::IsMember({"stump", "fit"}));
  bounds->add_option("--rho", rho);
  bounds->add_option("--loss-bound", loss_bound, "M for lemma1");
  bounds->add_option("--n", lemma_n, "n for lemma1");
  bounds->add_option("--two-sided", two_sided);
  bounds->add_option("--class", hclass, "class for the supremum of ineq2/ineq3")
      ->check(CLI::IsMember({"stump", "mlp"}));
  rad_arch.add(bounds);

  // tritrain
  auto* tri = app.add_subcommand("tritrain", "tri-training with per-round bound trace");
  ArchOptions tri_arch;
  TriTrainConfig tri_cfg;
  std::size_t refine_epochs = 5;
  tri_arch.add(tri);
  tri->add_option("--source", source_path);
  tri->add_option("--target", target_path);
  tri->add_option("--target-star", target_star_path);
  tri->add_option("--rounds", tri_cfg.rounds);
  tri->add_option("--refine-epochs", refine_epochs);
  tri->add_option("--holdout", tri_cfg.holdout_fraction);
  tri->add_option("--delta", tri_cfg.delta);
  tri->add_option("--draws", tri_cfg.rademacher_draws);

  // select
  auto* sel = app.add_subcommand("select", "rank sources against a target and adapt with CORAL");
  ArchOptions sel_arch;
  std::vector<std::string> source_paths;
  std::vector<std::size_t> clean_idx;
  std::string measure = "phd";
  SelectionConfig sel_cfg;
  double sigma = 0.0;
  sel_arch.add(sel);
  sel->add_option("--sources", source_paths, "labeled source files");
  sel->add_option("--clean", clean_idx, "indices of known clean sources (scoring only)");
  sel->add_option("--target", target_path);
  sel->add_option("--measure", measure)->check(CLI::IsMember({"phd", "w1"}));
  sel->add_option("--top-k", sel_cfg.top_k);
  sel->add_option("--ssl-rounds", sel_cfg.self_train.rounds);
  sel->add_option("--holdout", sel_cfg.phd_holdout);
  sel->add_option("--ridge", sel_cfg.ridge);
  sel->add_option("--w1-points", sel_cfg.w1_points);
  sel->add_option("--sigma", sigma, "noise level recorded in the report");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
  ArchOptions gc_arch;
  std::size_t gc_d = 5, gc_n = 16;
  int gc_k = 2;
  double gc_eps = 1e-5;
  gc_arch.add(gc);
  gc->add_option("--d", gc_d);
  gc->add_option("--k", gc_k);
  gc->add_option("--n", gc_n, "probe rows");
  gc->add_option("--eps", gc_eps);

  // repro
  auto* repro = app.add_subcommand("repro", "desk-scale experiment tables");
  std::string repro_name;
  std::size_t repro_seeds = 0, repro_n = 0, repro_epochs = 0;
  repro->add_option("name", repro_name, "table1 | table2 | table3 | fig2")
      ->required()
      ->check(CLI::IsMember({"table1", "table2", "table3", "fig2"}));
  repro->add_option("--seeds", repro_seeds, "trials (0 = protocol default)");
  repro->add_option("--n", repro_n, "sample size (0 = protocol default)");
  repro->add_option("--epochs", repro_epochs, "training epochs (0 = protocol default)");

  for (auto* sub : app.get_subcommands({})) sub->option_defaults()->always_capture_default();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_json("config", e.what()).dump() << '\n';
    return 2;
  }

  if (g.jobs > 0) omp_set_num_threads(g.jobs);
  CLI::App* cmd = app.get_subcommands().front();
  Json config = option_values(app);
  config[cmd->get_name()] = option_values(*cmd);
  const Emitter emit(g, config);
  const Rng root(g.seed);
  Json partial_trace = Json::array();

  try {
    const std::string name = cmd->get_name();
    if (name == "gen") {
      ps.rule = parse_label_rule(rule);
      if (shift.size() == 1) shift.assign(ps.d, shift.front());
      ps.shift = shift;
      ps.seed = g.seed;
      const auto [s, t] = gen_gaussian_pair(ps);
      Json files = Json::array();
      if (data_format == "csv") {
        write_csv(s, emit.path("source.csv"));
        write_csv(t, emit.path("target.csv"));
        files = {"source.csv", "target.csv"};
      } else {
        write_idx(s, emit.path("source-images.idx"), emit.path("source-labels.idx"));
        write_idx(t, emit.path("target-images.idx"), emit.path("target-labels.idx"));
        files = {"source-images.idx", "source-labels.idx", "target-images.idx", "target-labels.idx"};
      }
      Table tab{"gen", {"domain", "n", "d", "k"}, {}};
      tab.add_row({std::string("source"), static_cast<std::int64_t>(s.size()),
                   static_cast<std::int64_t>(s.dim()), static_cast<std::int64_t>(s.k)});
      tab.add_row({std::string("target"), static_cast<std::int64_t>(t.size()),
                   static_cast<std::int64_t>(t.dim()), static_cast<std::int64_t>(t.k)});
      emit.emit("gen", name, Json{{"files", files}, {"domains", to_json(tab)}}, tab);
    } else if (name == "train") {
      require_file_option(train_data, "data");
      require_file_option(train_model, "model");
      const Dataset d = load_data(train_data, label_col);
      const Architecture arch = train_arch.arch(d.dim(), d.k);
      Hypothesis h = Hypothesis::constant(d.dim(), 0);
      Json extra = Json::object();
      if (ssl_target.empty()) {
        h = train_erm(d, arch, train_arch.train(root.child(1).seed()), LossSpec::surrogate_for(arch));
      } else {
        ssl_cfg.base = train_arch.train(0);
        const auto r = train_self(d, load_data(ssl_target, label_col).without_labels(), arch,
                                  ssl_cfg, root.child(2).seed());
        h = r.h;
        extra["pseudo_labeled"] = r.consumed.size();
        extra["added_per_round"] = r.added_per_round;
      }
      save_hypothesis(h, train_model);
      const double acc = 1.0 - empirical_risk(h, std::span<const int>(d.labels()), d,
                                              LossSpec::zero_one());
      const auto& p = h.provenance();
      Json res{{"model", train_model},
               {"architecture", arch.describe()},
               {"train_accuracy", acc},
               {"initial_loss", p.initial_loss},
               {"final_loss", p.final_loss},
               {"self_training", extra}};
      Table tab{"train", {"architecture", "train_accuracy", "final_loss"}, {}};
      tab.add_row({arch.describe(), acc, p.final_loss});
      emit.emit("train", name, std::move(res), tab);
    } else if (name == "phd") {
      require_file_option(h1_path, "h1");
      require_file_option(h2_path, "h2");
      require_file_option(target_path, "target");
      const Hypothesis h1 = load_hypothesis(h1_path);
      const Hypothesis h2 = load_hypothesis(h2_path);
      const Dataset t = load_data(target_path, label_col).without_labels();
      const LossSpec loss = loss_name == "margin" ? LossSpec::margin(rho) : LossSpec::zero_one();
      const auto r = paired_discrepancy(h1, h2, t, loss);
      emit.emit("phd", name, to_json(r), discrepancy_table({r}));
    } else if (name == "dh" || name == "sdisc" || name == "disc") {
      require_file_option(source_path, "source");
      require_file_option(target_path, "target");
      const Dataset s = load_data(source_path, label_col);
      const Dataset t = load_data(target_path, label_col).without_labels();
      DiscrepancyReport r;
      if (name == "disc") {
        r = disc_exact(s, t, StumpClass::from_samples(s.x, t.x), max_class);
      } else if (hclass == "stump") {
        const StumpClass cls = StumpClass::from_samples(s.x, t.x);
        if (name == "dh") {
          r = dh_exact(s, t, cls);
        } else {
          const Hypothesis hs = hs_path.empty()
                                    ? StumpClass::hypothesis(stump_erm(cls, s), s.dim())
                                    : load_hypothesis(hs_path);
          r = sdisc_exact(s, t, hs, cls);
        }
      } else {
        const Architecture arch = adv_arch.arch(s.dim(), 2);
        AdversarialConfig ac;
        ac.train = adv_arch.train(root.child(3).seed());
        ac.held_out = held_out;
        ac.split_seed = root.child(4).seed();
        if (name == "dh") {
          r = dh_adv(s, t, arch, ac);
        } else {
          const Hypothesis hs =
              hs_path.empty()
                  ? train_erm(s, arch, adv_arch.train(root.child(5).seed()), LossSpec::surrogate_for(arch))
                  : load_hypothesis(hs_path);
          r = sdisc_adv(s, t, hs, arch, ac);
        }
      }
      emit.emit(name, name, to_json(r), discrepancy_table({r}));
    } else if (name == "w1") {
      require_file_option(source_path, "source");
      require_file_option(target_path, "target");
      const auto r = w1_exact(load_data(source_path, label_col), load_data(target_path, label_col),
                              root.child(6).seed(), max_points);
      emit.emit("w1", name, to_json(r), discrepancy_table({r}));
    } else if (name == "bounds") {
      BoundReport b;
      std::optional<Hypothesis> t_star;
      if (!target_star_path.empty()) t_star = load_hypothesis(target_star_path);
      const Hypothesis* star = t_star ? &*t_star : nullptr;
      if (bound_id == "lemma1") {
        b = bound_lemma1(loss_bound, lemma_n, delta, two_sided);
      } else {
        require_file_option(target_path, "target");
        const Dataset t_full = load_data(target_path, label_col);
        const Dataset t = t_full.without_labels();
        const TargetOracle oracle{star, nullptr};
        auto need = [](const std::string& p, const char* opt) {
          require_file_option(p, opt);
          return load_hypothesis(p);
        };
        auto rademacher = [&](const Hypothesis& ref) {
          if (rad_class == "stump") return rademacher_stumps(t.x, draws, root.child(7).seed());
          Architecture a = ref.arch();
          a.outputs = 1;
          return rademacher_fit(t.x, a, rad_arch.train(0), draws, root.child(7).seed());
        };
        if (bound_id == "ineq1") {
          b = bound_ineq1(need(h_path, "hyp"), need(hs_path, "hs"), t, oracle);
        } else if (bound_id == "ineq2" || bound_id == "ineq3") {
          require_file_option(source_path, "source");
          const Dataset s = load_data(source_path, label_col);
          const Hypothesis h = need(h_path, "hyp");
          const Hypothesis hs = need(hs_path, "hs");
          DiscrepancyReport sup;
          const StumpClass cls = StumpClass::from_samples(s.x, t.x);
          if (bound_id == "ineq3") {
            sup = disc_exact(s, t, cls);
          } else if (hclass == "stump") {
            sup = sdisc_exact(s, t, hs, cls);
          } else {
            AdversarialConfig ac;
            ac.train = rad_arch.train(root.child(3).seed());
            sup = sdisc_adv(s, t, hs, hs.arch(), ac);
          }
          b = bound_id == "ineq2" ? bound_ineq2(h, hs, s, t, sup, oracle)
                                  : bound_ineq3(h, hs, s, t, sup, oracle);
        } else if (bound_id == "thm1") {
          b = bound_thm1(need(h_path, "hyp"), need(h1_path, "h1"), need(h2_path, "h2"), t,
                         LossSpec::zero_one(), oracle);
        } else if (bound_id == "thm4") {
          const Hypothesis h = need(h_path, "hyp");
          b = bound_thm4(h, need(h1_path, "h1"), need(h2_path, "h2"), t, rademacher(h), delta, oracle);
        } else {
          const Hypothesis h = need(h_path, "hyp");
          b = bound_thm6_margin(h, need(h1_path, "h1"), need(h2_path, "h2"), t, rho,
                                h.arch().classes(), rademacher(h), delta, oracle);
        }
      }
      emit.emit("bounds", name, to_json(b), bound_table(b));
    } else if (name == "tritrain") {
      require_file_option(source_path, "source");
      require_file_option(target_path, "target");
      const Dataset s = load_data(source_path, label_col);
      const Dataset t = load_data(target_path, label_col);
      std::optional<Hypothesis> t_star;
      if (!target_star_path.empty()) t_star = load_hypothesis(target_star_path);
      tri_cfg.arch = tri_arch.arch(s.dim(), s.k);
      tri_cfg.source = tri_arch.train(0);
      tri_cfg.refine = tri_arch.train(0);
      tri_cfg.refine.epochs = refine_epochs;
      tri_cfg.target_star = t_star ? &*t_star : nullptr;
      tri_cfg.seed = root.child(8).seed();
      const std::string trace_path = emit.to_dir() ? emit.path("tritrain_trace.jsonl") : "";
      if (!trace_path.empty()) std::ofstream(trace_path, std::ios::trunc);
      tri_cfg.on_round = [&](const RoundRecord& rec) {
        Json j = to_json(rec);
        if (!trace_path.empty()) std::ofstream(trace_path, std::ios::app) << j.dump() << '\n';
        partial_trace.push_back(std::move(j));
      };
      const TriTrainResult r = tritrain(s, t, tri_cfg);
      Json rounds = Json::array();
      for (const auto& rec : r.rounds) rounds.push_back(to_json(rec));
      Json res{{"rounds", std::move(rounds)},
               {"pseudo_label_rows", r.pl_rows.size()},
               {"held_out_rows", r.held_rows.size()}};
      if (t.labeled()) {
        const Dataset held = t.subset(r.held_rows);
        res["source_only_accuracy"] =
            1.0 - empirical_risk(r.source_only, std::span<const int>(held.labels()), held,
                                 LossSpec::zero_one());
      }
      if (emit.to_dir()) {
        emit.write("tritrain_trace.csv", trace_csv(r));
        save_hypothesis(r.h, emit.path("h.model"));
      }
      emit.emit("tritrain", name, std::move(res));
    } else if (name == "select") {
      if (source_paths.size() < 2) throw ConfigError("select needs at least 2 --sources");
      require_file_option(target_path, "target");
      std::vector<Dataset> sources;
      for (const auto& p : source_paths) sources.push_back(load_data(p, label_col));
      std::vector<bool> clean(sources.size(), false);
      for (auto i : clean_idx) {
        if (i >= clean.size()) throw ConfigError("--clean index out of range");
        clean[i] = true;
      }
      const Dataset t = load_data(target_path, label_col);
      sel_cfg.measure = parse_selection_measure(measure);
      sel_cfg.arch = sel_arch.arch(t.dim(), sources.front().k);
      sel_cfg.train = sel_arch.train(0);
      sel_cfg.self_train.base = sel_cfg.train;
      sel_cfg.seed = root.child(9).seed();
      const auto o = select_sources(sources, clean, t, sel_cfg, sigma);
      emit.emit("select", name, to_json(o), selection_table(o));
    } else if (name == "gradcheck") {
      const Architecture arch = gc_arch.arch(gc_d, gc_k);
      Rng rng = root.child(10);
      Matrix x = random_normal(gc_n, gc_d, rng);
      std::vector<int> y(gc_n);
      for (auto& v : y) v = static_cast<int>(rng.below(static_cast<std::size_t>(arch.classes())));
      const Dataset probe = make_dataset(std::move(x), std::move(y), arch.classes(), "probe");
      const double err =
          grad_check(arch, LossSpec::surrogate_for(arch), probe, gc_eps, root.child(11).seed());
      Table tab{"gradcheck", {"architecture", "max_relative_error"}, {}};
      tab.add_row({arch.describe(), err});
      emit.emit("gradcheck", name,
                Json{{"architecture", arch.describe()}, {"max_relative_error", err}}, tab);
    } else if (name == "repro") {
      Json res;
      Table tab;
      if (repro_name == "table1" || repro_name == "table2") {
        IdenticalConfig c;
        c.seed = g.seed;
        if (repro_seeds) c.seeds = repro_seeds;
        if (repro_n) c.n = repro_n;
        if (repro_epochs) c.epochs = repro_epochs;
        const auto runs = identical_domain_runs(c);
        tab = repro_name == "table1" ? table1(runs) : table2(runs);
        res = to_json(tab);
        if (repro_name == "table2") {
          Json bounds_json = Json::array();
          for (const auto& r : runs)
            bounds_json.push_back(Json{{"thm1", to_json(r.thm1)}, {"ineq2", to_json(r.ineq2)}});
          res["bounds"] = std::move(bounds_json);
        }
      } else if (repro_name == "table3") {
        UnrelatedConfig c;
        c.seed = g.seed;
        if (repro_seeds) c.seeds = repro_seeds;
        if (repro_n) c.n = repro_n;
        if (repro_epochs) c.epochs = repro_epochs;
        tab = table3(c);
        res = to_json(tab);
      } else {
        SelectionExperimentConfig c;
        c.seed = g.seed;
        if (repro_seeds) c.seeds = repro_seeds;
        if (repro_n) c.n_source = repro_n;
        if (repro_epochs) c.epochs = repro_epochs;
        const Fig2Result f = fig2(c);
        tab = f.summary;
        res = Json{{"summary", to_json(f.summary)}, {"runs", to_json(f.runs)}};
      }
      emit.emit(repro_name, "repro " + repro_name, std::move(res), tab);
    }
  } catch (const TrainingError& e) {
    Json err = error_json(e.kind(), e.what());
    err["error"]["epoch"] = e.epoch();
    err["partial_trace"] = partial_trace;
    std::cerr << err.dump() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << error_json(e.kind(), e.what()).dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e.what()).dump() << '\n';
    return 3;
  }
  return 0;
}
