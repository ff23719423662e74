#include "pfb/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pfb {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config." + path + ": " + what);
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

std::size_t get_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
  }
}

LossModel parse_loss(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object with a 'kind'");
  const json* kind = find(j, "kind");
  if (!kind) fail(path + ".kind", "missing");
  const std::string k = get_string(*kind, path + ".kind");
  if (k == "constant") {
    reject_unknown(j, path, {"kind", "value"});
    const json* v = find(j, "value");
    if (!v) fail(path + ".value", "missing");
    return ConstantLoss{get_number(*v, path + ".value")};
  }
  if (k == "gaussian") {
    reject_unknown(j, path, {"kind", "mean", "stddev", "clip_low", "clip_high"});
    GaussianLoss g;
    const json* m = find(j, "mean");
    if (!m) fail(path + ".mean", "missing");
    g.mean = get_number(*m, path + ".mean");
    if (const json* v = find(j, "stddev")) g.stddev = get_number(*v, path + ".stddev");
    if (const json* v = find(j, "clip_low")) g.clip_low = get_number(*v, path + ".clip_low");
    if (const json* v = find(j, "clip_high")) g.clip_high = get_number(*v, path + ".clip_high");
    return g;
  }
  if (k == "bernoulli") {
    reject_unknown(j, path, {"kind", "mean"});
    const json* m = find(j, "mean");
    if (!m) fail(path + ".mean", "missing");
    return BernoulliLoss{get_number(*m, path + ".mean")};
  }
  if (k == "adversarial") {
    reject_unknown(j, path, {"kind", "tape"});
    const json* t = find(j, "tape");
    if (!t) fail(path + ".tape", "missing");
    return AdversarialLoss{get_numbers(*t, path + ".tape")};
  }
  fail(path + ".kind", "unknown loss kind '" + k + "'");
}

json loss_to_json(const LossModel& model) {
  return std::visit(
      [](const auto& m) -> json {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ConstantLoss>) {
          return {{"kind", "constant"}, {"value", m.value}};
        } else if constexpr (std::is_same_v<M, GaussianLoss>) {
          return {{"kind", "gaussian"}, {"mean", m.mean}, {"stddev", m.stddev},
                  {"clip_low", m.clip_low}, {"clip_high", m.clip_high}};
        } else if constexpr (std::is_same_v<M, BernoulliLoss>) {
          return {{"kind", "bernoulli"}, {"mean", m.mean}};
        } else {
          return {{"kind", "adversarial"}, {"tape", m.tape}};
        }
      },
      model);
}

InstanceSpec parse_instance(const json& j) {
  if (!j.is_object()) fail("instance", "expected an object");
  reject_unknown(j, "instance", {"horizon", "feedback_probs", "loss_models"});
  InstanceSpec spec;
  const json* h = find(j, "horizon");
  if (!h) fail("instance.horizon", "missing");
  spec.horizon = get_count(*h, "instance.horizon");
  const json* f = find(j, "feedback_probs");
  if (!f) fail("instance.feedback_probs", "missing");
  spec.feedback_probs = get_numbers(*f, "instance.feedback_probs");
  const json* l = find(j, "loss_models");
  if (!l || !l->is_array()) fail("instance.loss_models", "expected an array");
  for (std::size_t i = 0; i < l->size(); ++i)
    spec.loss_models.push_back(parse_loss((*l)[i], "instance.loss_models[" + std::to_string(i) + "]"));
  try {
    make_instance(spec);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("config.") + e.what());
  }
  return spec;
}

AlgorithmSpec parse_algorithm(const json& j, const std::string& path) {
  AlgorithmSpec a;
  if (j.is_string()) {
    a.id = j.get<std::string>();
    return a;
  }
  if (!j.is_object()) fail(path, "expected an algorithm id or {\"id\", \"f_star\"}");
  reject_unknown(j, path, {"id", "f_star"});
  const json* id = find(j, "id");
  if (!id) fail(path + ".id", "missing");
  a.id = get_string(*id, path + ".id");
  if (const json* fs = find(j, "f_star")) a.f_star = get_number(*fs, path + ".f_star");
  return a;
}

json algorithm_to_json(const AlgorithmSpec& a) {
  json j = {{"id", a.id}};
  if (a.f_star) j["f_star"] = *a.f_star;
  return j;
}

json to_json_value(const ExperimentConfig& c) {
  json j;
  j["format_version"] = kConfigFormatVersion;
  j["experiment"] = to_string(c.kind);
  j["seed"] = c.seed;
  if (c.replicates) j["replicates"] = *c.replicates;
  j["coupling"] = to_string(c.coupling);
  j["algorithms"] = json::array();
  for (const auto& a : c.algorithms) j["algorithms"].push_back(algorithm_to_json(a));
  if (c.instance) {
    json inst = {{"horizon", c.instance->horizon}, {"feedback_probs", c.instance->feedback_probs}};
    inst["loss_models"] = json::array();
    for (const auto& m : c.instance->loss_models) inst["loss_models"].push_back(loss_to_json(m));
    j["instance"] = inst;
  }
  j["sweep"] = {{"arm", c.sweep.arm}, {"f_grid", c.sweep.f_grid}};
  if (c.sweep.tolerance) j["sweep"]["tolerance"] = *c.sweep.tolerance;
  j["generator"] = {{"num_instances", c.generator.num_instances},
                    {"num_arms", c.generator.num_arms},
                    {"horizon", c.generator.horizon}};
  j["horizons"] = c.horizons;
  j["fig1"] = {{"horizon", c.fig1.horizon}, {"f_grid", c.fig1.f_grid}, {"other_arm_f", c.fig1.other_arm_f}};
  j["oracle"] = {{"base", to_string(c.oracle.base)}};
  if (c.oracle.oracle_feedback_probs) j["oracle"]["oracle_feedback_probs"] = *c.oracle.oracle_feedback_probs;
  return j;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kRun: return "run";
    case ExperimentKind::kMonotonicity: return "monotonicity";
    case ExperimentKind::kCorrelate: return "correlate";
    case ExperimentKind::kRegret: return "regret";
    case ExperimentKind::kFig1: return "fig1";
    case ExperimentKind::kProp3: return "prop3";
    case ExperimentKind::kOracleCheck: return "oracle-check";
  }
  return "run";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (ExperimentKind k : {ExperimentKind::kRun, ExperimentKind::kMonotonicity, ExperimentKind::kCorrelate,
                           ExperimentKind::kRegret, ExperimentKind::kFig1, ExperimentKind::kProp3,
                           ExperimentKind::kOracleCheck})
    if (to_string(k) == name) return k;
  throw ConfigError("config.experiment: unknown experiment '" + name + "'");
}

std::string to_string(Coupling c) { return c == Coupling::kCoupled ? "coupled" : "independent"; }

std::size_t ExperimentConfig::replicate_count() const {
  if (replicates) return *replicates;
  switch (kind) {
    case ExperimentKind::kMonotonicity: return 2000;
    case ExperimentKind::kCorrelate: return 1;
    case ExperimentKind::kOracleCheck: return 5000;
    case ExperimentKind::kProp3: return 100;
    default: return 500;
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail("<root>", "expected a JSON object");
  reject_unknown(j, "", {"format_version", "experiment", "seed", "replicates", "coupling", "algorithm",
                         "algorithms", "instance", "sweep", "generator", "horizons", "fig1", "oracle"});

  const json* version = find(j, "format_version");
  if (!version) fail("format_version", "missing");
  if (!version->is_number_integer() || version->get<int>() != kConfigFormatVersion)
    fail("format_version", "unsupported version (expected " + std::to_string(kConfigFormatVersion) + ")");

  ExperimentConfig c;
  const json* kind = find(j, "experiment");
  if (!kind) fail("experiment", "missing");
  c.kind = experiment_kind_from_string(get_string(*kind, "experiment"));

  if (const json* v = find(j, "seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
      fail("seed", "expected a non-negative integer");
    c.seed = v->get<std::uint64_t>();
  }
  if (const json* v = find(j, "replicates")) {
    c.replicates = get_count(*v, "replicates");
    if (*c.replicates == 0) fail("replicates", "must be >= 1");
  }
  if (const json* v = find(j, "coupling")) {
    const std::string s = get_string(*v, "coupling");
    if (s == "coupled") c.coupling = Coupling::kCoupled;
    else if (s == "independent") c.coupling = Coupling::kIndependent;
    else fail("coupling", "expected 'coupled' or 'independent'");
  }
  if (find(j, "algorithm") && find(j, "algorithms")) fail("algorithm", "give either 'algorithm' or 'algorithms'");
  if (const json* v = find(j, "algorithm")) c.algorithms.push_back(parse_algorithm(*v, "algorithm"));
  if (const json* v = find(j, "algorithms")) {
    if (!v->is_array()) fail("algorithms", "expected an array");
    for (std::size_t i = 0; i < v->size(); ++i)
      c.algorithms.push_back(parse_algorithm((*v)[i], "algorithms[" + std::to_string(i) + "]"));
  }
  if (const json* v = find(j, "instance")) c.instance = parse_instance(*v);

  if (const json* v = find(j, "sweep")) {
    if (!v->is_object()) fail("sweep", "expected an object");
    reject_unknown(*v, "sweep", {"arm", "f_grid", "tolerance"});
    if (const json* a = find(*v, "arm")) c.sweep.arm = get_count(*a, "sweep.arm");
    if (const json* g = find(*v, "f_grid")) c.sweep.f_grid = get_numbers(*g, "sweep.f_grid");
    if (const json* t = find(*v, "tolerance")) c.sweep.tolerance = get_number(*t, "sweep.tolerance");
  }
  if (const json* v = find(j, "generator")) {
    if (!v->is_object()) fail("generator", "expected an object");
    reject_unknown(*v, "generator", {"num_instances", "num_arms", "horizon"});
    if (const json* a = find(*v, "num_instances")) c.generator.num_instances = get_count(*a, "generator.num_instances");
    if (const json* a = find(*v, "num_arms")) c.generator.num_arms = get_count(*a, "generator.num_arms");
    if (const json* a = find(*v, "horizon")) c.generator.horizon = get_count(*a, "generator.horizon");
  }
  if (const json* v = find(j, "horizons")) {
    if (!v->is_array()) fail("horizons", "expected an array of integers");
    for (std::size_t i = 0; i < v->size(); ++i)
      c.horizons.push_back(get_count((*v)[i], "horizons[" + std::to_string(i) + "]"));
  }
  if (const json* v = find(j, "fig1")) {
    if (!v->is_object()) fail("fig1", "expected an object");
    reject_unknown(*v, "fig1", {"horizon", "f_grid", "other_arm_f"});
    if (const json* a = find(*v, "horizon")) c.fig1.horizon = get_count(*a, "fig1.horizon");
    if (const json* a = find(*v, "f_grid")) c.fig1.f_grid = get_numbers(*a, "fig1.f_grid");
    if (const json* a = find(*v, "other_arm_f")) c.fig1.other_arm_f = get_number(*a, "fig1.other_arm_f");
  }
  if (const json* v = find(j, "oracle")) {
    if (!v->is_object()) fail("oracle", "expected an object");
    reject_unknown(*v, "oracle", {"base", "oracle_feedback_probs"});
    if (const json* a = find(*v, "base")) {
      try {
        c.oracle.base = base_algorithm_from_string(get_string(*a, "oracle.base"));
      } catch (const ConfigError&) {
        throw;
      } catch (const ValidationError& e) {
        fail("oracle.base", e.what());
      }
    }
    if (const json* a = find(*v, "oracle_feedback_probs"))
      c.oracle.oracle_feedback_probs = get_numbers(*a, "oracle.oracle_feedback_probs");
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& config, int indent) {
  return to_json_value(config).dump(indent);
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json_value(config).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate_config(const ExperimentConfig& c) {
  auto need_instance = [&]() -> Instance {
    if (!c.instance) fail("instance", "required for experiment '" + to_string(c.kind) + "'");
    return make_instance(*c.instance);
  };
  auto need_algorithms = [&]() {
    if (c.algorithms.empty()) fail("algorithm", "required for experiment '" + to_string(c.kind) + "'");
  };
  auto check_algorithm = [&](std::size_t i, const Instance& inst) {
    try {
      validate_algorithm(c.algorithms[i], inst);
    } catch (const ValidationError& e) {
      fail("algorithms[" + std::to_string(i) + "]", e.what());
    }
  };

  switch (c.kind) {
    case ExperimentKind::kRun:
    case ExperimentKind::kRegret: {
      need_algorithms();
      const Instance inst = need_instance();
      for (std::size_t i = 0; i < c.algorithms.size(); ++i) check_algorithm(i, inst);
      if (c.kind == ExperimentKind::kRegret) {
        if (c.horizons.empty()) fail("horizons", "required for experiment 'regret'");
        for (std::size_t i = 0; i < c.horizons.size(); ++i) {
          if (c.horizons[i] < 2) fail("horizons[" + std::to_string(i) + "]", "must be >= 2");
          if (i > 0 && c.horizons[i] <= c.horizons[i - 1])
            fail("horizons[" + std::to_string(i) + "]", "horizons must be strictly increasing");
        }
        if (inst.has_adversarial_losses()) fail("instance.loss_models", "regret sweeps need stochastic losses");
      }
      break;
    }
    case ExperimentKind::kMonotonicity: {
      need_algorithms();
      const Instance inst = need_instance();
      if (c.sweep.arm >= inst.num_arms()) fail("sweep.arm", "arm index out of range");
      if (c.sweep.f_grid.size() < 2) fail("sweep.f_grid", "need at least two grid points");
      for (std::size_t g = 0; g < c.sweep.f_grid.size(); ++g) {
        const double f = c.sweep.f_grid[g];
        const std::string path = "sweep.f_grid[" + std::to_string(g) + "]";
        if (!(f > 0.0 && f <= 1.0)) fail(path, "must lie in (0,1]");
        const Instance point = inst.with_feedback_prob(c.sweep.arm, f);
        for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
          try {
            validate_algorithm(c.algorithms[i], point);
          } catch (const ValidationError& e) {
            fail(path, e.what());
          }
        }
      }
      break;
    }
    case ExperimentKind::kCorrelate: {
      if (c.generator.num_instances == 0) fail("generator.num_instances", "must be >= 1");
      if (c.generator.num_arms < 2) fail("generator.num_arms", "must be >= 2");
      if (c.generator.horizon < 2) fail("generator.horizon", "must be >= 2");
      for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
        const std::string& id = c.algorithms[i].id;
        if (id != "bbpull_ucb" && id != "bbpull_aae" && id != "three_phase_exp3_simplified")
          fail("algorithms[" + std::to_string(i) + "]",
               "correlation study supports bbpull_ucb, bbpull_aae, three_phase_exp3_simplified");
      }
      break;
    }
    case ExperimentKind::kFig1: {
      if (c.fig1.horizon < 2) fail("fig1.horizon", "must be >= 2");
      if (c.fig1.f_grid.size() < 2) fail("fig1.f_grid", "need at least two grid points");
      for (std::size_t g = 0; g < c.fig1.f_grid.size(); ++g)
        if (!(c.fig1.f_grid[g] > 0.0 && c.fig1.f_grid[g] <= 1.0))
          fail("fig1.f_grid[" + std::to_string(g) + "]", "must lie in (0,1]");
      if (!(c.fig1.other_arm_f > 0.0 && c.fig1.other_arm_f <= 1.0)) fail("fig1.other_arm_f", "must lie in (0,1]");
      break;
    }
    case ExperimentKind::kProp3: {
      if (c.horizons.empty()) fail("horizons", "required for experiment 'prop3'");
      for (std::size_t i = 0; i < c.horizons.size(); ++i)
        if (c.horizons[i] < 2) fail("horizons[" + std::to_string(i) + "]", "must be >= 2");
      break;
    }
    case ExperimentKind::kOracleCheck: {
      const Instance inst = need_instance();
      if (inst.has_adversarial_losses()) fail("instance.loss_models", "oracle check needs stochastic losses");
      if (c.oracle.oracle_feedback_probs) {
        const auto& f = *c.oracle.oracle_feedback_probs;
        if (f.size() != inst.num_arms()) fail("oracle.oracle_feedback_probs", "one entry per arm required");
        for (std::size_t i = 0; i < f.size(); ++i)
          if (!(f[i] >= 0.0 && f[i] <= 1.0))
            fail("oracle.oracle_feedback_probs[" + std::to_string(i) + "]", "must lie in [0,1]");
      }
      break;
    }
  }
}

}  // namespace pfb
