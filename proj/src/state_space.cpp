#include "langevin/state_space.hpp"

#include <algorithm>
#include <cmath>

#include "langevin/errors.hpp"

namespace langevin {

using Eigen::MatrixXd;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::overdamped: return "overdamped";
    case ModelKind::underdamped: return "underdamped";
    case ModelKind::custom: return "custom";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "overdamped") return ModelKind::overdamped;
  if (text == "underdamped") return ModelKind::underdamped;
  if (text == "custom") return ModelKind::custom;
  throw InvalidParameter("unknown model kind: " + text);
}

namespace {

bool is_psd(const MatrixXd& M, double tol) {
  if (M.rows() != M.cols()) return false;
  if ((M - M.transpose()).norm() > tol * (1.0 + M.norm())) return false;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol * (1.0 + M.norm());
}

MatrixXd psd_sqrt(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (M + M.transpose()));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

HatModel make_custom_model(const MatrixXd& A, const MatrixXd& B, const MatrixXd& C, const MatrixXd& sigma,
                           const MatrixXd& S) {
  const auto n = A.rows();
  if (n == 0 || A.cols() != n) throw InvalidParameter("A must be square and nonempty");
  if (B.rows() != n || B.cols() != 1) throw InvalidParameter("B must be N x 1");
  if (C.rows() != 1 || C.cols() != n) throw InvalidParameter("C must be 1 x N");
  if (sigma.rows() != n || sigma.cols() == 0) throw InvalidParameter("sigma must be N x M");
  if (S.rows() != n || S.cols() != n) throw InvalidParameter("S must be N x N");
  if (!is_psd(S, 1e-12)) throw InvalidParameter("S must be symmetric positive semidefinite");
  HatModel m;
  m.kind = ModelKind::custom;
  m.A = A;
  m.B = B;
  m.C = C;
  m.sigma = sigma;
  m.S = S;
  m.D = 0.5 * sigma * sigma.transpose();
  return m;
}

HatModel make_model(ModelKind kind, double gamma, ForceScale c) {
  if (!(c.value > 0.0) || !std::isfinite(c.value)) throw InvalidParameter("force scale c must be positive");
  HatModel m;
  m.kind = kind;
  m.c = c;
  switch (kind) {
    case ModelKind::overdamped:
      m.gamma = gamma;
      m.A = MatrixXd::Zero(1, 1);
      m.B = MatrixXd::Constant(1, 1, -c.value);
      m.C = MatrixXd::Ones(1, 1);
      m.sigma = MatrixXd::Constant(1, 1, std::sqrt(2.0 * c.value));
      m.S = MatrixXd::Zero(1, 1);
      m.D = MatrixXd::Constant(1, 1, c.value);
      break;
    case ModelKind::underdamped:
      if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidParameter("friction gamma must be positive");
      m.gamma = gamma;
      m.A = MatrixXd{{-gamma, 0.0}, {1.0, 0.0}};
      m.B = MatrixXd{{-c.value}, {0.0}};
      m.C = MatrixXd{{0.0, 1.0}};
      m.sigma = MatrixXd{{std::sqrt(2.0 * gamma * c.value)}, {0.0}};
      m.S = MatrixXd{{1.0 / c.value, 0.0}, {0.0, 0.0}};
      m.D = MatrixXd{{gamma * c.value, 0.0}, {0.0, 0.0}};
      break;
    case ModelKind::custom:
      throw InvalidParameter("use make_custom_model or build_from_skew for custom models");
  }
  return m;
}

RelationReport check_invariance_relations(const HatModel& model, double tolerance) {
  const MatrixXd& A = model.A;
  const MatrixXd& B = model.B;
  const MatrixXd& C = model.C;
  const MatrixXd& S = model.S;
  const MatrixXd& D = model.D;
  auto scale = [](std::initializer_list<double> norms) {
    double s = 1.0;
    for (double v : norms) s = std::max(s, v);
    return s;
  };

  RelationReport r;
  r.tolerance = tolerance;

  const MatrixXd DS = D * S;
  r.trace = std::abs((A + DS).trace());
  r.trace_rel = r.trace / scale({std::abs(A.trace()), std::abs(DS.trace())});

  const MatrixXd CB = C * B;
  const MatrixXd CDC = C * D * C.transpose();
  r.cb = (CB + CDC).norm();
  r.cb_rel = r.cb / scale({CB.norm(), CDC.norm()});

  const MatrixXd CA = C * A;
  const MatrixXd BS = B.transpose() * S;
  const MatrixXd CDS = 2.0 * C * DS;
  r.cross = (CA + BS + CDS).norm();
  r.cross_rel = r.cross / scale({CA.norm(), BS.norm(), CDS.norm()});

  const MatrixXd SA = S * A;
  const MatrixXd SDS = 2.0 * S * DS;
  r.lyapunov = (SA + SA.transpose() + SDS).norm();
  r.lyapunov_rel = r.lyapunov / scale({2.0 * SA.norm(), SDS.norm()});

  r.marginal = (S * C.transpose()).norm();
  r.marginal_rel = r.marginal / scale({S.norm() * C.norm()});

  r.relations_pass = r.trace_rel <= tolerance && r.cb_rel <= tolerance && r.cross_rel <= tolerance &&
                     r.lyapunov_rel <= tolerance;
  r.marginal_pass = r.marginal_rel <= tolerance;
  r.pass = r.relations_pass && r.marginal_pass;
  return r;
}

HatModel build_from_skew(const MatrixXd& D, const MatrixXd& R, const MatrixXd& S, const MatrixXd& C,
                         double tolerance) {
  const auto n = D.rows();
  if (n == 0 || D.cols() != n || R.rows() != n || R.cols() != n || S.rows() != n || S.cols() != n)
    throw InvalidParameter("D, R, S must be square of equal size");
  if (C.rows() != 1 || C.cols() != n) throw InvalidParameter("C must be 1 x N");
  if ((R + R.transpose()).norm() > tolerance * (1.0 + R.norm())) throw InvalidParameter("R is not skew-symmetric");
  if (!is_psd(D, tolerance)) throw InvalidParameter("D must be positive semidefinite");
  if (!is_psd(S, tolerance)) throw InvalidParameter("S must be positive semidefinite");

  const MatrixXd DR = D + R;
  HatModel m;
  m.kind = ModelKind::custom;
  m.A = -DR * S;
  m.B = -DR * C.transpose();
  m.C = C;
  m.S = S;
  m.sigma = std::sqrt(2.0) * psd_sqrt(D);
  // Keep the caller's D rather than the rounded product of sigma.
  m.D = 0.5 * (D + D.transpose());
  return m;
}

nlohmann::json matrix_to_json(const MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw InvalidParameter("matrix must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols)
      throw InvalidParameter("matrix rows must have equal length");
    for (Eigen::Index k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
  }
  return M;
}

nlohmann::json to_json(const HatModel& model) {
  return {{"kind", to_string(model.kind)},
          {"gamma", model.gamma},
          {"c", model.c.value},
          {"N", model.n_hat()},
          {"A", matrix_to_json(model.A)},
          {"B", matrix_to_json(model.B)},
          {"C", matrix_to_json(model.C)},
          {"sigma", matrix_to_json(model.sigma)},
          {"S", matrix_to_json(model.S)},
          {"D", matrix_to_json(model.D)}};
}

HatModel model_from_json(const nlohmann::json& j) {
  try {
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    if (kind != ModelKind::custom) return make_model(kind, j.value("gamma", 0.0), j.at("c").get<double>());
    HatModel m = make_custom_model(matrix_from_json(j.at("A")), matrix_from_json(j.at("B")),
                                   matrix_from_json(j.at("C")), matrix_from_json(j.at("sigma")),
                                   matrix_from_json(j.at("S")));
    m.gamma = j.value("gamma", 0.0);
    m.c = j.value("c", 1.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed model JSON: ") + e.what());
  }
}

nlohmann::json to_json(const RelationReport& r) {
  return {{"trace", r.trace},
          {"cb", r.cb},
          {"cross", r.cross},
          {"lyapunov", r.lyapunov},
          {"marginal", r.marginal},
          {"trace_rel", r.trace_rel},
          {"cb_rel", r.cb_rel},
          {"cross_rel", r.cross_rel},
          {"lyapunov_rel", r.lyapunov_rel},
          {"marginal_rel", r.marginal_rel},
          {"tolerance", r.tolerance},
          {"relations_pass", r.relations_pass},
          {"marginal_pass", r.marginal_pass},
          {"pass", r.pass}};
}

}  // namespace langevin
