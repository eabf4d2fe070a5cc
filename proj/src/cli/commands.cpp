#include "awt/cli/commands.hpp"

#include "awt/data/io.hpp"
#include "awt/error.hpp"
#include "awt/eval/report.hpp"
#include "awt/training/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace awt {

namespace {

void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw ValidationError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw ValidationError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ValidationError("cannot create directory " + dir.string());
}

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("missing ") + what + " path");
  if (!fs::is_regular_file(path)) throw ValidationError(std::string(what) + " file not found: " + path.string());
}

// Refuses outputs that would overwrite an input.
void check_distinct(const fs::path& input, const fs::path& output) {
  std::error_code ec;
  if (fs::exists(output) && fs::equivalent(input, output, ec)) {
    throw ValidationError("output " + output.string() + " would overwrite input " + input.string());
  }
}

nlohmann::json stats_json(const ChannelStats& s) {
  nlohmann::json j;
  j["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
  j["std"] = std::vector<double>(s.std.data(), s.std.data() + s.std.size());
  j["clamped"] = s.clamped;
  return j;
}

bool same_stats(const ChannelStats& a, const ChannelStats& b) {
  if (a.mean.size() != b.mean.size() || a.std.size() != b.std.size()) return false;
  auto close = [](const Vector<double>& x, const Vector<double>& y) {
    return ((x - y).array().abs() <= 1e-9 * (1 + x.array().abs())).all();
  };
  return close(a.mean, b.mean) && close(a.std, b.std);
}

PreparedData prepare_files(const fs::path& inertia_path, const fs::path& trajectory_path, std::uint64_t split_seed,
                           double train_fraction) {
  require_file(inertia_path, "inertia");
  require_file(trajectory_path, "trajectory");
  const Dataset inertia = load_dataset(inertia_path, Domain::inertia);
  const Dataset trajectory = load_dataset(trajectory_path, Domain::trajectory);
  return prepare(inertia, trajectory, split_seed, train_fraction);
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg, const fs::path& out_dir) {
  validate(cfg.synth);
  ensure_dir(out_dir);
  const SynthData data = synth_generate(cfg.synth);
  save_dataset(data.inertia, out_dir / "inertia.jsonl");
  save_dataset(data.trajectory, out_dir / "trajectory.jsonl");
  save_manifest(data.pairs, out_dir / "pairs.json");
}

TrainOutputs cmd_train(const RunConfig& cfg, const fs::path& inertia_path, const fs::path& trajectory_path,
                       const fs::path& out_dir, std::ostream* progress) {
  validate(cfg);
  const PreparedData data =
      prepare_files(fs::absolute(inertia_path), fs::absolute(trajectory_path), cfg.split_seed, cfg.train_fraction);
  ensure_dir(out_dir);

  std::size_t iterations = 0;
  double epoch_rec = 0;
  const std::size_t longest = std::max(data.inertia.train.size(), data.trajectory.train.size());
  const std::size_t per_epoch = (longest + cfg.train.batch_size - 1) / cfg.train.batch_size;
  TrainResult result = train(cfg.train, data.inertia.train, data.trajectory.train, [&](const LossReport& r) {
    ++iterations;
    epoch_rec += r.l_rec;
    if (progress && iterations % per_epoch == 0) {
      *progress << "epoch " << iterations / per_epoch << " mean l_rec " << epoch_rec / static_cast<double>(per_epoch)
                << " last " << format_record(r) << '\n'
                << std::flush;
      epoch_rec = 0;
    }
  });

  TrainOutputs out{out_dir / "checkpoint.awt", out_dir / "metrics.csv", out_dir / "stats.json", out_dir / "run.cfg",
                   iterations};
  save_checkpoint(make_checkpoint(std::move(result.model), data), out.checkpoint);
  std::ostringstream log;
  result.log.write(log);
  write_file(out.metrics, log.str());
  const nlohmann::json stats{{"inertia", stats_json(data.inertia.stats)},
                             {"trajectory", stats_json(data.trajectory.stats)},
                             {"split_seed", data.split_seed},
                             {"train_fraction", data.train_fraction},
                             {"train_counts", {{"inertia", data.inertia.train.size()},
                                               {"trajectory", data.trajectory.train.size()}}},
                             {"test_counts", {{"inertia", data.inertia.test.size()},
                                              {"trajectory", data.trajectory.test.size()}}}};
  write_file(out.stats, stats.dump(2) + "\n");
  write_file(out.config, format_run_config(cfg));
  return out;
}

Direction parse_direction(std::string_view s) {
  if (s == "i2t") return Direction::i2t;
  if (s == "t2i") return Direction::t2i;
  throw ValidationError("direction must be i2t or t2i, got '" + std::string(s) + "'");
}

std::string trajectory_svg(const Matrix<double>& xy, const std::string& title) {
  if (xy.rows() < 2 || xy.cols() < 1) throw ValidationError("trajectory_svg: need (2+, L) coordinates");
  constexpr double size = 256, margin = 8;
  const double x0 = xy.row(0).minCoeff(), x1 = xy.row(0).maxCoeff();
  const double y0 = xy.row(1).minCoeff(), y1 = xy.row(1).maxCoeff();
  const double span = std::max({x1 - x0, y1 - y0, 1e-12});
  const double scale = (size - 2 * margin) / span;
  std::string points;
  char buf[64];
  for (Index t = 0; t < xy.cols(); ++t) {
    // SVG's y axis points down.
    std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", t ? " " : "", margin + (xy(0, t) - x0) * scale,
                  size - margin - (xy(1, t) - y0) * scale);
    points += buf;
  }
  std::string escaped;
  for (char c : title) {
    switch (c) {
      case '<': escaped += "&lt;"; break;
      case '>': escaped += "&gt;"; break;
      case '&': escaped += "&amp;"; break;
      default: escaped += c;
    }
  }
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"256\" height=\"256\" viewBox=\"0 0 256 256\">\n"
         "<title>" + escaped + "</title>\n"
         "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"" + points + "\"/>\n"
         "</svg>\n";
}

std::size_t cmd_translate(const fs::path& checkpoint, const fs::path& input, Direction direction,
                          const fs::path& out_path, const std::optional<fs::path>& svg_dir) {
  require_file(checkpoint, "checkpoint");
  require_file(input, "input");
  check_distinct(input, out_path);
  const Checkpoint ck = load_checkpoint(checkpoint);
  const Domain source = direction == Direction::i2t ? Domain::inertia : Domain::trajectory;
  const Domain target = other(source);

  Dataset raw;
  try {
    raw = load_dataset(input, source);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("translate ") + (direction == Direction::i2t ? "i2t" : "t2i") + " expects " +
                          std::string(to_string(source)) + " input: " + e.what());
  }
  if (raw.rate_hz != ck.rate(source)) {
    throw ValidationError("input rate " + std::to_string(raw.rate_hz) + " Hz differs from the checkpoint's " +
                          std::string(to_string(source)) + " rate " + std::to_string(ck.rate(source)) + " Hz");
  }
  if (raw.class_count() > ck.model.config.class_count) {
    throw ValidationError("input has " + std::to_string(raw.class_count()) + " classes, checkpoint " +
                          std::to_string(ck.model.config.class_count));
  }
  const Dataset prepared = prepare_with(raw, ck.stats(source));
  const std::vector<Sample> translated = translate_dataset(ck.model, prepared, ck.rate(target));

  Dataset out;
  out.domain = target;
  out.rate_hz = ck.rate(target);
  out.class_names = raw.class_names;
  out.samples.reserve(translated.size());
  for (const Sample& s : translated) {
    Sample physical = s;
    physical.values = invert_stats(s.values, ck.stats(target));
    out.samples.push_back(std::move(physical));
  }
  if (auto parent = out_path.parent_path(); !parent.empty()) ensure_dir(parent);
  save_dataset(out, out_path);

  if (svg_dir && direction == Direction::i2t) {
    ensure_dir(*svg_dir);
    for (const Sample& s : out.samples) {
      const std::string name = out.class_names.empty() ? std::to_string(s.label) : out.class_names[s.label];
      write_file(*svg_dir / (s.id + ".svg"), trajectory_svg(s.values.topRows(2), s.id + " (" + name + ")"));
    }
  }
  return out.samples.size();
}

nlohmann::json cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& inertia_path,
                        const fs::path& trajectory_path, const std::optional<fs::path>& pairs_path,
                        const fs::path& report_path) {
  validate(cfg);
  require_file(checkpoint, "checkpoint");
  const Checkpoint ck = load_checkpoint(checkpoint);
  const PreparedData data = prepare_files(inertia_path, trajectory_path, ck.split_seed, ck.train_fraction);
  if (!same_stats(data.inertia.stats, ck.stats_inertia) || !same_stats(data.trajectory.stats, ck.stats_trajectory)) {
    throw ValidationError("evaluation data does not reproduce the checkpoint's training split statistics");
  }
  std::optional<PairingManifest> manifest;
  if (pairs_path) {
    require_file(*pairs_path, "pairs");
    manifest = load_manifest(*pairs_path);
  }

  const ProbeSet probes = train_probes(data, cfg.probe);
  EvalReport report;
  report.arm = "checkpoint";
  report.model = evaluate_arm(report.arm, ck.model, data, probes, cfg.linear_probe, manifest ? &*manifest : nullptr);
  if (cfg.two_stream) {
    const DomainSplit& split = data.domain(cfg.two_stream_domain);
    report.two_stream = two_stream_eval(ck.model, split.train, split.test, ck.rate(other(cfg.two_stream_domain)),
                                        cfg.probe, cfg.two_stream_control);
    report.minority_class = cfg.minority_class;
  }
  const nlohmann::json j = to_json(report);
  if (auto parent = report_path.parent_path(); !parent.empty()) ensure_dir(parent);
  write_file(report_path, j.dump(2) + "\n");
  return j;
}

nlohmann::json cmd_ablate(const RunConfig& cfg, const fs::path& inertia_path, const fs::path& trajectory_path,
                          const fs::path& out_dir, std::ostream* progress) {
  validate(cfg);
  const PreparedData data = prepare_files(inertia_path, trajectory_path, cfg.split_seed, cfg.train_fraction);
  ensure_dir(out_dir);
  const ProbeSet probes = train_probes(data, cfg.probe);
  const std::vector<ArmReport> arms =
      ablation_suite(cfg.train, data, probes, cfg.linear_probe, [&](const std::string& arm, const LossReport& r) {
        if (progress && (r.step + 1) % 100 == 0) *progress << arm << ' ' << format_record(r) << '\n' << std::flush;
      });
  nlohmann::json summary = nlohmann::json::object();
  for (const ArmReport& a : arms) {
    std::ostringstream log;
    a.log.write(log);
    write_file(out_dir / (a.arm + ".csv"), log.str());
    EvalReport r;
    r.arm = a.arm;
    r.model = a;
    summary[a.arm] = to_json(r);
  }
  write_file(out_dir / "ablation.json", summary.dump(2) + "\n");
  return summary;
}

GradSuiteResult cmd_gradcheck(std::uint64_t seed, std::ostream& out) {
  const GradSuiteResult r = run_gradient_suite(seed);
  char buf[160];
  for (const GradCaseResult& c : r.cases) {
    std::snprintf(buf, sizeof buf, "%-32s max_rel_error=%.3e coordinates=%zu %s\n", c.name.c_str(), c.max_rel_error,
                  c.coordinates, c.passed ? "PASS" : "FAIL");
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "gradcheck: %s (%zu cases, %.2f s)\n", r.passed() ? "PASS" : "FAIL", r.cases.size(),
                r.seconds);
  out << buf;
  return r;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unpaired translation between inertial and trajectory handwriting signals"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--seed", seed, "Random seed for this command");
  };

  std::string out_dir, inertia, trajectory, pairs, checkpoint, input, output, svg_dir, direction, report, ablate;
  std::optional<int> epochs, max_steps;
  bool two_stream = false;

  CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic paired dataset");
  common(gen);
  gen->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* tr = app.add_subcommand("train", "Train a translater");
  common(tr);
  tr->add_option("--inertia", inertia, "Inertial AWT-JSONL file");
  tr->add_option("--trajectory", trajectory, "Trajectory AWT-JSONL file");
  tr->add_option("--out", out_dir, "Output directory")->required();
  tr->add_option("--ablate", ablate, "Disable one loss term")->check(CLI::IsMember({"cls", "gan"}));
  tr->add_option("--epochs", epochs, "Override train.epochs");
  tr->add_option("--max-steps", max_steps, "Override train.max_steps");

  CLI::App* tl = app.add_subcommand("translate", "Translate recordings into the other domain");
  common(tl);
  tl->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  tl->add_option("--input", input, "Input AWT-JSONL file")->required();
  tl->add_option("--direction", direction, "i2t or t2i")->required()->check(CLI::IsMember({"i2t", "t2i"}));
  tl->add_option("--out", output, "Output AWT-JSONL file")->required();
  tl->add_option("--svg-dir", svg_dir, "Directory for per-sample SVG drawings (i2t only)");

  CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  common(ev);
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ev->add_option("--inertia", inertia, "Inertial AWT-JSONL file");
  ev->add_option("--trajectory", trajectory, "Trajectory AWT-JSONL file");
  ev->add_option("--pairs", pairs, "Pairing manifest (enables paired L1)");
  ev->add_option("--report", report, "Report JSON path")->required();
  ev->add_flag("--two-stream", two_stream, "Also run the two-stream comparison");

  CLI::App* ab = app.add_subcommand("ablate", "Train and evaluate the full, no_cls and no_gan arms");
  common(ab);
  ab->add_option("--inertia", inertia, "Inertial AWT-JSONL file");
  ab->add_option("--trajectory", trajectory, "Trajectory AWT-JSONL file");
  ab->add_option("--out", out_dir, "Output directory")->required();
  ab->add_option("--epochs", epochs, "Override train.epochs");

  CLI::App* gc = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  common(gc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    auto pick = [](const std::string& flag, const fs::path& from_config) {
      return fs::absolute(flag.empty() ? from_config : fs::path(flag));
    };
    if (epochs) cfg.train.epochs = *epochs;
    if (max_steps) cfg.train.max_steps = *max_steps;

    if (gen->parsed()) {
      if (seed) cfg.synth.seed = *seed;
      cmd_gen_data(cfg, fs::absolute(out_dir));
      out << "wrote inertia.jsonl, trajectory.jsonl and pairs.json to " << fs::absolute(out_dir).string() << "\n";
    } else if (tr->parsed()) {
      if (seed) cfg.train.seed = *seed;
      if (ablate == "cls") cfg.train.enable_cls = false;
      if (ablate == "gan") cfg.train.enable_gan = false;
      const TrainOutputs o = cmd_train(cfg, pick(inertia, cfg.inertia_path), pick(trajectory, cfg.trajectory_path),
                                       fs::absolute(out_dir), &out);
      out << "trained " << o.iterations << " iterations; checkpoint " << o.checkpoint.string() << "\n";
    } else if (tl->parsed()) {
      const std::optional<fs::path> svg = svg_dir.empty() ? std::nullopt : std::optional(fs::absolute(svg_dir));
      if (svg && direction == "t2i") err << "note: --svg-dir is ignored for t2i\n";
      const std::size_t n = cmd_translate(fs::absolute(checkpoint), fs::absolute(input), parse_direction(direction),
                                          fs::absolute(output), svg);
      out << "translated " << n << " records into " << fs::absolute(output).string() << "\n";
    } else if (ev->parsed()) {
      if (seed) cfg.probe.seed = cfg.linear_probe.seed = *seed;
      if (two_stream) cfg.two_stream = true;
      std::optional<fs::path> manifest;
      if (!pairs.empty()) {
        manifest = fs::absolute(pairs);
      } else if (!cfg.pairs_path.empty()) {
        manifest = fs::absolute(cfg.pairs_path);
      }
      const nlohmann::json j = cmd_eval(cfg, fs::absolute(checkpoint), pick(inertia, cfg.inertia_path),
                                        pick(trajectory, cfg.trajectory_path), manifest, fs::absolute(report));
      out << "mmd " << j.value("mmd", nlohmann::json()).dump() << " classifier_acc "
          << j.value("classifier_acc", nlohmann::json()).dump() << "; report " << fs::absolute(report).string()
          << "\n";
    } else if (ab->parsed()) {
      if (seed) cfg.train.seed = *seed;
      cmd_ablate(cfg, pick(inertia, cfg.inertia_path), pick(trajectory, cfg.trajectory_path), fs::absolute(out_dir),
                 &out);
      out << "wrote " << (fs::absolute(out_dir) / "ablation.json").string() << "\n";
    } else if (gc->parsed()) {
      if (!cmd_gradcheck(seed.value_or(1), out).passed()) return exit_numeric;
    }
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return exit_numeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_validation;
  }
  return exit_ok;
}

}  // namespace awt
