#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "drobust/adversary.hpp"
#include "drobust/errors.hpp"
#include "drobust/linear_model.hpp"
#include "drobust/metrics.hpp"
#include "drobust/trainer.hpp"

namespace drobust {

inline nlohmann::json to_json(const GroupWeights& gw) {
  nlohmann::json j;
  j["weights"] = gw.weights;
  if (gw.gamma.has_value()) j["gamma"] = *gw.gamma;
  j["achieved_divergence"] = gw.achieved_divergence;
  j["objective"] = gw.objective;
  j["path"] = solve_path_name(gw.path);
  return j;
}

inline nlohmann::json to_json(const TrainReport& report,
                              const TrainConfig& config) {
  nlohmann::json j;
  j["objective"] = objective_name(config.objective);
  j["divergence"] = divergence_name(config.divergence.kind);
  j["delta"] = config.divergence.delta;
  j["loss"] = loss_name(config.loss.kind);
  j["lambda"] = config.lambda;
  j["learning_rate"] = config.learning_rate;
  j["max_epochs"] = config.max_epochs;
  j["grad_tol"] = config.grad_tol;
  j["seed"] = report.seed;
  j["converged"] = report.converged;
  j["epochs_run"] = report.epochs_run;
  j["objective_trace"] = report.objective_trace;
  if (!report.objective_trace.empty()) {
    j["final_objective"] = report.objective_trace.back();
  }
  if (report.final_weights.has_value()) {
    j["final_weights"] = to_json(*report.final_weights);
  }
  return j;
}

inline nlohmann::json to_json(const RobustnessReport& report,
                              const FDivergenceSpec& spec) {
  nlohmann::json j;
  j["divergence"] = divergence_name(spec.kind);
  j["delta"] = spec.delta;
  j["ordinary_risk"] = report.ordinary_risk;
  j["adversarial_01_risk"] = report.adversarial_01_risk;
  j["structural_adv_risk_01"] = report.structural_adv_risk_01;
  if (report.structural_adv_risk_surrogate.has_value()) {
    j["structural_adv_risk_surrogate"] = *report.structural_adv_risk_surrogate;
  }
  j["per_group_risks"] = report.per_group_risks;
  j["group_counts"] = report.group_counts;
  j["sensitivity"] = report.sensitivity;
  j["weights_certificate"] = to_json(report.weights_certificate);
  return j;
}

/// Flat key = value block for human eyes (stdout).
inline std::string to_key_value_block(const RobustnessReport& report) {
  std::ostringstream out;
  out << "ordinary_risk = " << format_double(report.ordinary_risk) << "\n";
  out << "adversarial_01_risk = " << format_double(report.adversarial_01_risk)
      << "\n";
  out << "structural_adv_risk_01 = "
      << format_double(report.structural_adv_risk_01) << "\n";
  if (report.structural_adv_risk_surrogate.has_value()) {
    out << "structural_adv_risk_surrogate = "
        << format_double(*report.structural_adv_risk_surrogate) << "\n";
  }
  out << "sensitivity = " << format_double(report.sensitivity) << "\n";
  out << "per_group_risks =";
  for (double r : report.per_group_risks) out << " " << format_double(r);
  out << "\n";
  out << "group_counts =";
  for (auto c : report.group_counts) out << " " << c;
  out << "\n";
  return out.str();
}

inline std::string to_key_value_block(const GroupWeights& gw) {
  std::ostringstream out;
  out << "weights =";
  for (double w : gw.weights) out << " " << format_double(w);
  out << "\n";
  if (gw.gamma.has_value()) {
    out << "gamma = " << format_double(*gw.gamma) << "\n";
  }
  out << "achieved_divergence = " << format_double(gw.achieved_divergence)
      << "\n";
  out << "objective = " << format_double(gw.objective) << "\n";
  out << "path = " << solve_path_name(gw.path) << "\n";
  return out.str();
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file for writing: " + path);
  out << body;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace drobust
