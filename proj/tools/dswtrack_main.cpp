// dswtrack: simulate, track, odsw, train, eval and bench subcommands.
//
// Exit codes: 0 success, 1 unexpected error, 2 parse (bad flags or
// malformed files), 3 validation, 4 numerical failure.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dswtrack/eval.hpp"
#include "dswtrack/io.hpp"
#include "dswtrack/learn.hpp"
#include "dswtrack/odsw.hpp"
#include "dswtrack/sim.hpp"
#include "dswtrack/timing.hpp"

namespace fs = std::filesystem;
using namespace dswtrack;

namespace {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kParse = 2, kValidation = 3, kNumerical = 4 };

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

Vector parse_number_list(const std::string& text, const std::string& what) {
  const auto parts = split(text, ',');
  if (parts.empty()) throw InvalidInput(what + ": empty list");
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    try {
      std::size_t used = 0;
      v[static_cast<Eigen::Index>(i)] = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
    } catch (const std::logic_error&) {
      throw InvalidInput(what + ": '" + parts[i] + "' is not a number");
    }
  }
  return v;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  const Vector v = parse_number_list(text, what);
  std::vector<int> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != std::floor(v[i]) || v[i] < 1) throw InvalidInput(what + ": expected positive integers");
    out.push_back(static_cast<int>(v[i]));
  }
  return out;
}

struct PriorFlags {
  std::string kind = "dirichlet";
  double alpha = DirichletPrior{}.alpha;
  double mu = GaussianPriorParams{}.mu;
  double sigma2 = GaussianPriorParams{}.sigma2;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--prior", kind, "Prior over the stream weights")
        ->check(CLI::IsMember({"dirichlet", "gaussian"}));
    cmd->add_option("--alpha", alpha, "Dirichlet concentration parameter");
    cmd->add_option("--mu", mu, "Gaussian prior mean of lambda_1");
    cmd->add_option("--sigma2", sigma2, "Gaussian prior variance of lambda_1");
  }

  OdswPrior make() const {
    if (kind == "gaussian") return GaussianPriorParams{mu, sigma2};
    return DirichletPrior{alpha};
  }
};

struct SgdFlags {
  SgdConfig cfg;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lr", cfg.learning_rate, "SGD learning rate");
    cmd->add_option("--epochs", cfg.epochs, "Training epochs");
    cmd->add_option("--batch", cfg.batch_size, "Minibatch size");
    cmd->add_option("--seed", cfg.seed, "Shuffling seed");
  }
};

StreamWeights parse_fixed_weights(const std::string& text, std::size_t streams) {
  StreamWeights w(parse_number_list(text, "fixed weights"));
  if (w.size() != streams) {
    throw InvalidInput("fixed weights: got " + std::to_string(w.size()) + " values for " +
                       std::to_string(streams) + " streams");
  }
  return w;
}

WeightSource parse_weight_source(const std::string& spec, const SequenceRecord& rec, const SystemModel& model) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw InvalidInput("--weights must be fixed:<v1,v2,...>, file:<path> or predictor:<path>");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (kind == "fixed") return WeightSource::fixed(parse_fixed_weights(arg, model.stream_count()));
  if (kind == "file") {
    auto weights = io::parse_weights_jsonl(io::read_text_file(arg), arg);
    if (weights.size() != rec.size()) {
      throw InvalidInput(arg + ": " + std::to_string(weights.size()) + " weight lines for a " +
                         std::to_string(rec.size()) + "-step record");
    }
    for (const auto& w : weights) {
      if (w.size() != model.stream_count()) throw InvalidInput(arg + ": weight dimension does not match the model");
    }
    return WeightSource::per_frame(std::move(weights));
  }
  if (kind == "predictor") {
    auto p = io::parse_predictor(io::read_text_file(arg), arg);
    if (model.stream_count() != 2) throw InvalidInput("predictor weights need exactly 2 streams");
    for (const auto& f : rec.frames) {
      if (f.features.size() != p.w.size()) {
        throw InvalidInput("record features have dimension " + std::to_string(f.features.size()) +
                           " but the predictor expects " + std::to_string(p.w.size()));
      }
    }
    return predictor_source(std::move(p));
  }
  throw InvalidInput("unknown weight source '" + kind + "'");
}

void check_record(const SequenceRecord& rec, const SystemModel& model) {
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const auto& f = rec.frames[k];
    for (std::size_t m = 0; m < model.stream_count(); ++m) {
      if (f.observations[m] && f.observations[m]->size() != model.stream(m).dim) {
        throw InvalidInput("step " + std::to_string(k + 1) + ": stream '" + model.stream(m).label +
                           "' has dimension " + std::to_string(f.observations[m]->size()) + ", expected " +
                           std::to_string(model.stream(m).dim));
      }
    }
    if (rec.has_ground_truth() && rec.states[k].size() != model.state_dim()) {
      throw InvalidInput("step " + std::to_string(k + 1) + ": state dimension does not match the model");
    }
  }
}

SequenceRecord load_record(const std::string& path, const SystemModel& model) {
  const auto labels = model.labels();
  auto rec = io::load_sequence_record(path, labels);
  check_record(rec, model);
  return rec;
}

int run_simulate(const std::string& spec_path, const std::string& out, const std::optional<std::uint64_t>& seed) {
  auto spec = io::load_scenario_spec(spec_path);
  if (seed) spec.seed = *seed;
  const auto rec = simulate_sequence(spec);
  io::write_file_atomic(out, io::sequence_record_to_jsonl(rec));
  std::cout << "wrote " << rec.size() << " steps to " << out << '\n';
  return kOk;
}

int run_track(const std::string& in, const std::string& model_path, const std::string& weights,
              const std::string& out, double grace) {
  const auto model = make_cv_rvm_model(io::load_model_config(model_path));
  const auto rec = load_record(in, model);
  const auto source = parse_weight_source(weights, rec, model);
  const auto traj = track_sequence(rec, source, model);
  io::write_file_atomic(out, io::trajectory_to_jsonl(traj));
  if (rec.has_ground_truth()) {
    const double crmse = trajectory_crmse(traj, rec, EvalConfig{grace});
    std::cout << "cRMSE " << std::fixed << std::setprecision(4) << crmse << " deg\n";
  }
  return kOk;
}

int run_odsw(const std::string& in, const std::string& model_path, const std::string& out, const PriorFlags& prior,
             bool with_features) {
  const auto model = make_cv_rvm_model(io::load_model_config(model_path));
  const auto rec = load_record(in, model);
  if (!rec.has_ground_truth()) throw InvalidInput(in + ": oracle weights need ground-truth states");
  const auto weights = odsw_sequence(rec.states, rec.frames, model, prior.make());
  std::vector<Vector> features;
  if (with_features) {
    for (const auto& f : rec.frames) features.push_back(f.features);
  }
  io::write_file_atomic(out, io::weights_to_jsonl(weights, features));
  std::cout << "wrote " << weights.size() << " weight vectors to " << out << '\n';
  return kOk;
}

int run_train(const std::vector<std::string>& inputs, const std::string& out, const SgdConfig& cfg) {
  std::vector<TrainingRow> rows;
  for (const auto& path : inputs) {
    auto part = io::parse_training_rows(io::read_text_file(path), path);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  const auto result = train_predictor(std::move(rows), cfg);
  io::write_file_atomic(out, io::predictor_to_json(result.predictor));
  std::cout << "final loss " << std::setprecision(6) << result.epoch_loss.back() << " after "
            << result.epoch_loss.size() << " epochs\n";
  return kOk;
}

std::unique_ptr<TrackingPipeline> make_pipeline(const std::string& spec, const PriorFlags& prior,
                                                const SgdConfig& sgd, std::size_t streams) {
  if (spec == "dsw" || spec == "learned") return std::make_unique<LearnedWeightPipeline>(prior.make(), sgd);
  if (spec == "odsw") return std::make_unique<OracleWeightPipeline>(prior.make());
  if (spec.rfind("fixed:", 0) == 0) {
    return std::make_unique<FixedWeightPipeline>(parse_fixed_weights(spec.substr(6), streams));
  }
  throw InvalidInput("--pipeline must be dsw, odsw or fixed:<v1,v2,...>");
}

int run_eval(const std::string& model_path, const std::vector<std::string>& inputs, const std::string& pipeline,
             const PriorFlags& prior, const SgdConfig& sgd, double grace, const std::string& out) {
  const auto model = make_cv_rvm_model(io::load_model_config(model_path));
  std::vector<SequenceGroup> groups;
  std::map<std::string, std::size_t> index;
  for (const auto& entry : inputs) {
    const auto colon = entry.find(':');
    if (colon == std::string::npos || colon == 0) throw InvalidInput("--in expects group:path, got '" + entry + "'");
    const std::string group = entry.substr(0, colon);
    auto [it, inserted] = index.try_emplace(group, groups.size());
    if (inserted) groups.push_back(SequenceGroup{group, {}});
    groups[it->second].sequences.push_back(load_record(entry.substr(colon + 1), model));
  }
  const auto pipe = make_pipeline(pipeline, prior, sgd, model.stream_count());
  const auto result = cross_validate(groups, model, *pipe, EvalConfig{grace}, pipeline);

  std::vector<RunSummary> rows;
  std::vector<SequenceScore> scores;
  for (const auto& f : result.folds) {
    rows.push_back(f.summary);
    scores.insert(scores.end(), f.scores.begin(), f.scores.end());
  }
  rows.push_back(result.pooled);
  std::cout << format_summary_table(rows);
  if (!out.empty()) io::write_file_atomic(out, io::crmse_csv(pipeline, scores));
  return kOk;
}

int run_bench(const std::string& dx, const std::string& dym, const std::string& m, const TimingConfig& cfg,
              const std::string& out) {
  std::vector<TimingCondition> grid;
  for (int a : parse_int_list(dx, "--dx")) {
    for (int b : parse_int_list(dym, "--dym")) {
      for (int c : parse_int_list(m, "--m")) grid.push_back(TimingCondition{a, b, c});
    }
  }
  const auto results = timing_benchmark(grid, cfg);
  std::cout << std::setw(6) << "dx" << std::setw(6) << "dym" << std::setw(4) << "m" << "  ratio (mean ± std, median)\n";
  for (const auto& r : results) {
    std::cout << std::setw(6) << r.condition.state_dim << std::setw(6) << r.condition.obs_dim << std::setw(4)
              << r.condition.streams << "  " << std::fixed << std::setprecision(3) << r.ratio_mean << " ± "
              << r.ratio_std << ", " << r.ratio_median << '\n';
  }
  if (!out.empty()) io::write_file_atomic(out, io::timing_csv(results));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian filtering with dynamic stream weights"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic sequence from a scenario spec");
  std::string spec_path, sim_out;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--spec", spec_path, "Scenario JSON")->required();
  sim->add_option("--out", sim_out, "Output record (JSON Lines)")->required();
  sim->add_option("--seed", sim_seed, "Overrides the spec seed");

  auto* track = app.add_subcommand("track", "Run the DSW filter over a record");
  std::string track_in, track_model, track_weights, track_out;
  double track_grace = EvalConfig{}.grace_fraction;
  track->add_option("--in", track_in, "Record (JSON Lines)")->required();
  track->add_option("--model", track_model, "Model JSON")->required();
  track->add_option("--weights", track_weights, "fixed:<v1,v2,...> | file:<path> | predictor:<path>")->required();
  track->add_option("--out", track_out, "Belief trajectory (JSON Lines)")->required();
  track->add_option("--grace", track_grace, "Grace fraction excluded from cRMSE");

  auto* odsw = app.add_subcommand("odsw", "Oracle stream weights from ground truth");
  std::string odsw_in, odsw_model, odsw_out;
  PriorFlags odsw_prior;
  bool odsw_features = false;
  odsw->add_option("--in", odsw_in, "Record with ground truth")->required();
  odsw->add_option("--model", odsw_model, "Model JSON")->required();
  odsw->add_option("--out", odsw_out, "Weights (JSON Lines)")->required();
  odsw_prior.add_to(odsw);
  odsw->add_flag("--features", odsw_features, "Also write the reliability features (training-row format)");

  auto* train = app.add_subcommand("train", "Fit the logistic weight predictor");
  std::vector<std::string> train_in;
  std::string train_out;
  SgdFlags train_sgd;
  train->add_option("--in", train_in, "Training rows (JSON Lines with z and weights)")->required();
  train->add_option("--out", train_out, "Predictor JSON")->required();
  train_sgd.add_to(train);

  auto* eval = app.add_subcommand("eval", "Leave-one-group-out cRMSE evaluation");
  std::string eval_model, eval_pipeline = "dsw", eval_out;
  std::vector<std::string> eval_in;
  PriorFlags eval_prior;
  SgdFlags eval_sgd;
  double eval_grace = EvalConfig{}.grace_fraction;
  eval->add_option("--model", eval_model, "Model JSON")->required();
  eval->add_option("--in", eval_in, "group:path of a record; repeat for every sequence")->required();
  eval->add_option("--pipeline", eval_pipeline, "dsw | odsw | fixed:<v1,v2,...>");
  eval->add_option("--grace", eval_grace, "Grace fraction excluded from cRMSE");
  eval->add_option("--out", eval_out, "Per-sequence CSV");
  eval_prior.add_to(eval);
  eval_sgd.add_to(eval);

  auto* bench = app.add_subcommand("bench", "DSW-EKF vs stacked EKF runtime ratio");
  std::string bench_dx = "5,100", bench_dym = "1", bench_m = "2", bench_out;
  TimingConfig bench_cfg;
  bench->add_option("--dx", bench_dx, "State dimensions (comma separated)");
  bench->add_option("--dym", bench_dym, "Per-stream observation dimensions");
  bench->add_option("--m", bench_m, "Stream counts");
  bench->add_option("--runs", bench_cfg.runs, "Monte-Carlo runs per condition");
  bench->add_option("--steps", bench_cfg.steps, "Filter steps per run");
  bench->add_option("--seed", bench_cfg.seed, "Observation seed");
  bench->add_option("--out", bench_out, "CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParse;
  }

  try {
    if (*sim) return run_simulate(spec_path, sim_out, sim_seed);
    if (*track) return run_track(track_in, track_model, track_weights, track_out, track_grace);
    if (*odsw) return run_odsw(odsw_in, odsw_model, odsw_out, odsw_prior, odsw_features);
    if (*train) return run_train(train_in, train_out, train_sgd.cfg);
    if (*eval) {
      return run_eval(eval_model, eval_in, eval_pipeline, eval_prior, eval_sgd.cfg, eval_grace, eval_out);
    }
    if (*bench) return run_bench(bench_dx, bench_dym, bench_m, bench_cfg, bench_out);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}
