#include "pfb/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pfb/experiments.hpp"

namespace pfb {
namespace {

using nlohmann::json;

class Csv {
 public:
  Csv(const ExperimentConfig& config, std::initializer_list<const char*> columns) {
    os_ << "# tool: " << kToolName << " " << kToolVersion << "\n";
    os_ << "# experiment: " << to_string(config.kind) << "\n";
    os_ << "# config_hash: " << config_hash(config) << "\n";
    os_ << "# master_seed: " << config.seed << "\n";
    columns_ = columns;
  }

  void meta(const std::string& key, const std::string& value) { os_ << "# " << key << ": " << value << "\n"; }

  template <class... Cells>
  void row(const Cells&... cells) {
    if (!header_done_) {
      for (std::size_t i = 0; i < columns_.size(); ++i) os_ << (i ? "," : "") << columns_[i];
      os_ << "\n";
      header_done_ = true;
    }
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << "\n";
  }

  std::string str() {
    if (!header_done_) row_header_only();
    return os_.str();
  }

 private:
  static std::string cell(double x) { return format_number(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }

  void row_header_only() {
    for (std::size_t i = 0; i < columns_.size(); ++i) os_ << (i ? "," : "") << columns_[i];
    os_ << "\n";
    header_done_ = true;
  }

  std::ostringstream os_;
  std::vector<const char*> columns_;
  bool header_done_ = false;
};

json summary_header(const ExperimentConfig& config) {
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"experiment", to_string(config.kind)},
          {"config_hash", config_hash(config)},
          {"master_seed", config.seed},
          {"config", json::parse(config_to_json(config))}};
}

json mean_se_json(const MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}}; }

std::string label(const AlgorithmSpec& a) { return a.id; }

ExperimentOutput finish(const ExperimentConfig& config, Csv& csv, json summary, std::string text) {
  const std::string kind = to_string(config.kind);
  return {{{kind + ".csv", csv.str()}, {kind + ".json", summary.dump(2) + "\n"}}, std::move(text)};
}

void note(std::ostream* progress, const std::string& line) {
  if (progress) *progress << line << std::endl;
}

ExperimentOutput run_replicates(const ExperimentConfig& config, std::size_t jobs, std::ostream* progress) {
  const Instance instance = make_instance(*config.instance);
  const TapeSet tapes(config.seed);
  const std::size_t R = config.replicate_count();
  Csv csv(config, {"algorithm", "arm", "f", "apc_mean", "apc_se", "foc_mean", "foc_se", "regret_mean",
                   "regret_se", "replicates"});
  json summary = summary_header(config);
  summary["results"] = json::array();
  std::ostringstream text;
  for (const AlgorithmSpec& alg : config.algorithms) {
    note(progress, "run: " + alg.id + " x " + std::to_string(R) + " replicates");
    const ReplicateBatch b = replicate_run(alg, instance, tapes, R, jobs);
    const MetricsSummary& s = b.summary;
    for (ArmIndex i = 0; i < instance.num_arms(); ++i)
      csv.row(label(alg), i, instance.feedback_prob(i), s.apc_mean[i], s.apc_se[i], s.foc_mean[i], s.foc_se[i],
              s.regret_mean, s.regret_se, R);
    summary["results"].push_back({{"algorithm", alg.id},
                                  {"replicates", R},
                                  {"apc_mean", s.apc_mean},
                                  {"apc_se", s.apc_se},
                                  {"foc_mean", s.foc_mean},
                                  {"foc_se", s.foc_se},
                                  {"regret", {{"mean", s.regret_mean}, {"se", s.regret_se}}}});
    text << alg.id << ": regret " << format_number(s.regret_mean) << " +/- " << format_number(s.regret_se) << "\n";
  }
  return finish(config, csv, summary, text.str());
}

ExperimentOutput run_monotonicity(const ExperimentConfig& config, std::size_t jobs, std::ostream* progress) {
  const Instance instance = make_instance(*config.instance);
  const std::size_t R = config.replicate_count();
  Csv csv(config, {"algorithm", "arm", "f", "measure", "mean", "se", "replicates"});
  csv.meta("coupling", to_string(config.coupling));
  json summary = summary_header(config);
  summary["results"] = json::array();
  std::ostringstream text;
  for (const AlgorithmSpec& alg : config.algorithms) {
    note(progress, "monotonicity: " + alg.id + ", arm " + std::to_string(config.sweep.arm) + ", " +
                       std::to_string(config.sweep.f_grid.size()) + " grid points x " + std::to_string(R));
    const MonotonicityResult m = monotonicity_sweep(alg, instance, config.sweep.arm, config.sweep.f_grid,
                                                    config.coupling, config.seed, R, config.sweep.tolerance, jobs);
    for (const MonotonicityVerdict* v : {&m.apc_verdict, &m.foc_verdict})
      for (const GridEstimate& e : v->estimates)
        csv.row(label(alg), m.arm, e.f, to_string(v->measure), e.mean, e.se, R);
    json diffs = json::array();
    for (std::size_t g = 0; g < m.apc_difference.size(); ++g)
      diffs.push_back({{"f_low", m.f_grid[g]},
                       {"f_high", m.f_grid[g + 1]},
                       {"apc", mean_se_json(m.apc_difference[g])},
                       {"foc", mean_se_json(m.foc_difference[g])}});
    summary["results"].push_back({{"algorithm", alg.id},
                                  {"arm", m.arm},
                                  {"tolerance", m.tolerance},
                                  {"apc_verdict", to_string(m.apc_verdict.label)},
                                  {"foc_verdict", to_string(m.foc_verdict.label)},
                                  {"differences", diffs}});
    text << alg.id << " arm " << m.arm << ": APC consistent with " << to_string(m.apc_verdict.label)
         << ", FOC consistent with " << to_string(m.foc_verdict.label) << "\n";
  }
  return finish(config, csv, summary, text.str());
}

ExperimentOutput run_correlate(const ExperimentConfig& config, std::size_t jobs, std::ostream* progress) {
  const auto algs = config.algorithms.empty() ? default_correlation_algorithms() : config.algorithms;
  note(progress, "correlate: " + std::to_string(config.generator.num_instances) + " instances x " +
                     std::to_string(algs.size()) + " algorithms");
  const CorrelationResult r = correlation_study(config.generator, algs, config.seed, jobs);
  Csv csv(config, {"algorithm", "instance_id", "pearson_apc", "pearson_foc"});
  json summary = summary_header(config);
  json generators = json::object();
  for (const AlgorithmSpec& a : algs) {
    const GeneratorShape g = generator_shape(a.id);
    csv.meta("generator." + a.id, g.quantity + " range [" + format_number(g.raw_low) + "," +
                                      format_number(g.raw_high) + "] sd " + format_number(g.raw_stddev) +
                                      " scale " + format_number(g.scale));
    generators[a.id] = {{"raw_quantity", g.quantity},
                        {"raw_low", g.raw_low},
                        {"raw_high", g.raw_high},
                        {"raw_stddev", g.raw_stddev},
                        {"canonical_stddev", g.raw_stddev / g.scale},
                        {"scale", g.scale}};
  }
  summary["generators"] = generators;
  for (const CorrelationRow& row : r.rows) csv.row(row.algorithm, row.instance_id, row.pearson_apc, row.pearson_foc);
  summary["results"] = json::array();
  std::ostringstream text;
  for (const CorrelationStats& s : r.stats) {
    summary["results"].push_back({{"algorithm", s.algorithm},
                                  {"defined", s.defined},
                                  {"apc", {{"mean", s.apc_mean}, {"min", s.apc_min}, {"max", s.apc_max}}},
                                  {"foc", {{"mean", s.foc_mean}, {"min", s.foc_min}, {"max", s.foc_max}}}});
    text << s.algorithm << ": Pearson(f, APC) mean " << format_number(s.apc_mean) << " [" << format_number(s.apc_min)
         << ", " << format_number(s.apc_max) << "], Pearson(f, FOC) mean " << format_number(s.foc_mean) << " ["
         << format_number(s.foc_min) << ", " << format_number(s.foc_max) << "]\n";
  }
  return finish(config, csv, summary, text.str());
}

ExperimentOutput run_fig1(const ExperimentConfig& config, std::size_t jobs, std::ostream* progress) {
  const std::size_t R = config.replicate_count();
  note(progress, "fig1: 2 instances x " + std::to_string(config.fig1.f_grid.size()) + " grid points x " +
                     std::to_string(R));
  const Fig1Result r = fig1_reproduction(config.fig1, config.seed, R, jobs);
  Csv csv(config, {"instance", "f", "apc_mean", "apc_se"});
  csv.meta("swept_arm", "1");
  csv.meta("other_arm_f", format_number(r.other_arm_f));
  csv.meta("horizon", std::to_string(r.horizon));
  json summary = summary_header(config);
  summary["results"] = json::array();
  std::ostringstream text;
  for (const Fig1Curve& c : r.curves) {
    for (const GridEstimate& e : c.apc) csv.row(c.name, e.f, e.mean, e.se);
    summary["results"].push_back({{"instance", c.name},
                                  {"arm1_loss", c.arm1_loss},
                                  {"arm2_loss", c.arm2_loss},
                                  {"spearman", c.spearman},
                                  {"verdict", to_string(c.verdict.label)}});
    text << c.name << ": Spearman(f, APC_1) " << format_number(c.spearman) << ", APC consistent with "
         << to_string(c.verdict.label) << "\n";
  }
  return finish(config, csv, summary, text.str());
}

void regret_rows(Csv& csv, const RegretCurve& c) {
  for (const RegretPoint& p : c.points) csv.row(c.label, p.horizon, p.regret.mean, p.regret.se);
}

json regret_json(const RegretCurve& c) {
  json points = json::array();
  for (const RegretPoint& p : c.points)
    points.push_back({{"horizon", p.horizon},
                      {"regret_mean", p.regret.mean},
                      {"regret_se", p.regret.se},
                      {"regret_per_round", p.regret.mean / static_cast<double>(p.horizon)}});
  return {{"algorithm", c.label}, {"points", points}, {"growth_ratios", c.growth_ratios}};
}

ExperimentOutput run_regret(const ExperimentConfig& config, std::size_t jobs, std::ostream* progress) {
  const Instance instance = make_instance(*config.instance);
  const std::size_t R = config.replicate_count();
  Csv csv(config, {"algorithm", "horizon", "regret_mean", "regret_se"});
  json summary = summary_header(config);
  summary["results"] = json::array();
  std::ostringstream text;
  for (const AlgorithmSpec& alg : config.algorithms) {
    note(progress, "regret: " + alg.id + " at " + std::to_string(config.horizons.size()) + " horizons x " +
                       std::to_string(R));
    const RegretCurve c = regret_sweep(alg, instance, config.horizons, config.seed, R, jobs);
    regret_rows(csv, c);
    summary["results"].push_back(regret_json(c));
    text << alg.id << ": growth ratios";
    for (double g : c.growth_ratios) text << " " << format_number(g);
    text << "\n";
  }
  return finish(config, csv, summary, text.str());
}

ExperimentOutput run_prop3(const ExperimentConfig& config, std::size_t jobs, std::ostream* progress) {
  const std::size_t R = config.replicate_count();
  note(progress, "prop3: 2 instances at " + std::to_string(config.horizons.size()) + " horizons x " +
                     std::to_string(R));
  const Prop3Result r = prop3_demo(config.horizons, config.seed, R, jobs);
  Csv csv(config, {"algorithm", "horizon", "regret_mean", "regret_se"});
  csv.meta("exp3_naive", "arm 1 loss 0 f 0.25; arm 2 loss 0.5 f 1");
  csv.meta("exp3_naive_twin", "arm 1 loss 1 w.p. 0.75 f 1; arm 2 loss 0.5 f 1");
  regret_rows(csv, r.feedback);
  regret_rows(csv, r.twin);
  json summary = summary_header(config);
  summary["results"] = {regret_json(r.feedback), regret_json(r.twin)};
  std::ostringstream text;
  for (const RegretCurve* c : {&r.feedback, &r.twin}) {
    text << c->label << ": regret/T";
    for (const RegretPoint& p : c->points)
      text << " " << format_number(p.regret.mean / static_cast<double>(p.horizon)) << " (T=" << p.horizon << ")";
    text << "\n";
  }
  return finish(config, csv, summary, text.str());
}

ExperimentOutput run_oracle(const ExperimentConfig& config, std::size_t jobs, std::ostream* progress) {
  const Instance instance = make_instance(*config.instance);
  const std::size_t R = config.replicate_count();
  note(progress, "oracle-check: bbpull_" + to_string(config.oracle.base) + " vs simulated driver x " +
                     std::to_string(R));
  const OracleResult r =
      oracle_equivalence(config.oracle.base, instance, config.oracle.oracle_feedback_probs, config.seed, R, jobs);
  Csv csv(config, {"arm", "real_apc_mean", "real_apc_se", "simulated_apc_mean", "simulated_apc_se", "difference",
                   "combined_se", "within_3se"});
  for (ArmIndex i = 0; i < r.arms.size(); ++i) {
    const OracleArm& a = r.arms[i];
    csv.row(i, a.real_apc.mean, a.real_apc.se, a.simulated_apc.mean, a.simulated_apc.se, a.difference,
            a.combined_se, a.within ? "true" : "false");
  }
  json summary = summary_header(config);
  summary["results"] = {{"base", to_string(r.base)},
                        {"oracle_feedback_probs", r.oracle_feedback_probs},
                        {"all_within_3se", r.all_within}};
  std::string text = std::string("oracle-check: ") + (r.all_within ? "all arms within 3 SE" : "mismatch") + "\n";
  return finish(config, csv, summary, text);
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

ExperimentOutput run_experiment(const ExperimentConfig& config, std::size_t jobs, std::ostream* progress) {
  validate_config(config);
  switch (config.kind) {
    case ExperimentKind::kRun: return run_replicates(config, jobs, progress);
    case ExperimentKind::kMonotonicity: return run_monotonicity(config, jobs, progress);
    case ExperimentKind::kCorrelate: return run_correlate(config, jobs, progress);
    case ExperimentKind::kRegret: return run_regret(config, jobs, progress);
    case ExperimentKind::kFig1: return run_fig1(config, jobs, progress);
    case ExperimentKind::kProp3: return run_prop3(config, jobs, progress);
    case ExperimentKind::kOracleCheck: return run_oracle(config, jobs, progress);
  }
  throw ConfigError("config.experiment: unsupported");
}

}  // namespace pfb
