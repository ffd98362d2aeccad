#pragma once

#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "langevin/precision.hpp"

namespace langevin {

enum class ModelKind { overdamped, underdamped, custom };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

// SDE  d xi = A xi dt + B grad f(C xi) dt + sigma dW  in compact form: the
// full d-dimensional model is A (x) I_d etc., so only the small "hat"
// matrices are stored.
struct HatModel {
  ModelKind kind = ModelKind::custom;
  double gamma = 0.0;
  ForceScale c;
  Eigen::MatrixXd A, B, C, sigma, S;
  Eigen::MatrixXd D;  // sigma sigma' / 2, fixed at construction

  int n_hat() const { return static_cast<int>(A.rows()); }
};

// Overdamped: A=0, B=-c, C=1, sigma=sqrt(2c), S=0 (the density is carried by
// f alone). Underdamped: A=[[-g,0],[1,0]], B=[-c;0], C=[0,1],
// sigma=[sqrt(2gc);0], S=diag(1/c,0).
HatModel make_model(ModelKind kind, double gamma, ForceScale c);

// Assemble a model from explicit matrices; validates shapes and S.
HatModel make_custom_model(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& C, const Eigen::MatrixXd& sigma,
                           const Eigen::MatrixXd& S);

struct RelationReport {
  // Absolute residuals of Tr(A+DS), CB+CDC', CA+B'S+2CDS, SA+A'S+2SDS, SC'.
  double trace = 0.0;
  double cb = 0.0;
  double cross = 0.0;
  double lyapunov = 0.0;
  double marginal = 0.0;
  // Same residuals divided by max(1, size of the terms being cancelled), so
  // that models with large S (small c) are judged on rounding alone.
  double trace_rel = 0.0, cb_rel = 0.0, cross_rel = 0.0, lyapunov_rel = 0.0, marginal_rel = 0.0;
  double tolerance = 1e-12;
  bool relations_pass = false;  // the four relations
  bool marginal_pass = false;   // SC' = 0
  bool pass = false;            // all five
};

RelationReport check_invariance_relations(const HatModel& model, double tolerance = 1e-12);

// A = -(D+R)S, B = -(D+R)C', sigma = sqrt(2D). R must be skew.
HatModel build_from_skew(const Eigen::MatrixXd& D, const Eigen::MatrixXd& R, const Eigen::MatrixXd& S,
                         const Eigen::MatrixXd& C, double tolerance = 1e-12);

nlohmann::json to_json(const HatModel& model);
HatModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RelationReport& report);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& M);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace langevin
