#include "dsekit/io.hpp"

// vendored single-header nlohmann/json
#include <json.hpp>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dsekit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("cannot parse JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << text;
  if (!out) throw DataError("write failed: " + path);
}

VectorXd to_vector(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw DataError(what + " must be a JSON array");
  VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw DataError(what + " must hold numbers");
    v(static_cast<int>(i)) = arr[i].get<double>();
  }
  return v;
}

json from_vector(const VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Chain config
// ---------------------------------------------------------------------------

KinematicChain load_chain(const std::string& path) {
  const json j = parse_file(path);
  try {
    if (j.value("convention", "standard-dh") != std::string("standard-dh")) {
      throw DataError("unsupported DH convention in " + path);
    }
    std::vector<DhRow> rows;
    for (const auto& r : j.at("dh")) {
      if (!r.is_array() || r.size() != 4) {
        throw DataError("dh rows must be [a, alpha, d, theta_offset]");
      }
      rows.push_back(DhRow{r[0].get<double>(), r[1].get<double>(),
                           r[2].get<double>(), r[3].get<double>()});
    }
    std::vector<std::array<double, 2>> limits;
    for (const auto& l : j.at("limits")) {
      limits.push_back({l.at(0).get<double>(), l.at(1).get<double>()});
    }
    std::vector<Vector3d> points;
    if (j.contains("control_points")) {
      for (const auto& p : j.at("control_points")) {
        points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(),
                            p.at(2).get<double>());
      }
    }
    VectorXd home;
    if (j.contains("home")) home = to_vector(j.at("home"), "home");
    return KinematicChain(std::move(rows), std::move(limits), std::move(points),
                          std::move(home), j.value("name", "chain"));
  } catch (const json::exception& e) {
    throw DataError("bad chain config " + path + ": " + e.what());
  }
}

void save_chain(const KinematicChain& chain, const std::string& path) {
  json j;
  j["name"] = chain.name();
  j["convention"] = "standard-dh";
  json dh = json::array();
  for (const DhRow& r : chain.links()) {
    dh.push_back({r.a, r.alpha, r.d, r.theta_offset});
  }
  j["dh"] = dh;
  json limits = json::array();
  for (const auto& l : chain.joint_limits()) limits.push_back({l[0], l[1]});
  j["limits"] = limits;
  json points = json::array();
  for (const auto& p : chain.control_points()) {
    points.push_back({p.x(), p.y(), p.z()});
  }
  j["control_points"] = points;
  j["home"] = from_vector(chain.home());
  write_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Datasets (JSON Lines)
// ---------------------------------------------------------------------------

DemoSet load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path);
  DemoSet set;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      Demo d;
      d.obs = to_vector(j.at("obs"), "obs");
      const auto& traj = j.at("traj");
      if (!traj.is_array() || traj.empty()) throw DataError("traj must be a non-empty array");
      d.traj.steps.resize(static_cast<int>(traj.size()), d.obs.size());
      for (std::size_t k = 0; k < traj.size(); ++k) {
        const VectorXd q = to_vector(traj[k], "traj row");
        if (q.size() != d.obs.size()) {
          throw DataError("traj rows must match obs dimension");
        }
        d.traj.steps.row(static_cast<int>(k)) = q.transpose();
      }
      d.traj.dt = j.at("dt").get<double>();
      set.demos.push_back(std::move(d));
    } catch (const json::exception& e) {
      std::ostringstream msg;
      msg << "bad dataset record at " << path << ":" << line_no << ": "
          << e.what();
      throw DataError(msg.str());
    }
  }
  if (set.demos.empty()) throw DataError("dataset is empty: " + path);
  try {
    set.validate();
  } catch (const ContractViolation& e) {
    throw DataError("inconsistent dataset " + path + ": " + e.what());
  }
  return set;
}

void save_dataset(const DemoSet& set, const std::string& path) {
  set.validate();
  std::ostringstream out;
  for (const Demo& d : set.demos) {
    json j;
    j["obs"] = from_vector(d.obs);
    json traj = json::array();
    for (int k = 0; k < d.traj.length(); ++k) {
      traj.push_back(from_vector(d.traj.steps.row(k).transpose()));
    }
    j["traj"] = traj;
    j["dt"] = d.traj.dt;
    out << j.dump() << "\n";
  }
  write_file(path, out.str());
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

namespace {
constexpr const char* kModelFormat = "dsekit-model-v1";
}

void save_model(const DenoiserModel& model, const std::string& path) {
  json j;
  j["format"] = kModelFormat;
  j["label"] = model.label();
  j["traj_len"] = model.traj_len();
  j["dof"] = model.dof();
  j["dt"] = model.dt();
  j["hidden"] = model.hidden();
  j["activation"] = "silu";
  j["time_embed_dim"] = model.time_embed_dim();
  j["schedule"] = {{"betas", from_vector(model.schedule().betas)}};
  j["normalizer"] = {
      {"traj_mean", from_vector(model.traj_normalizer().mean)},
      {"traj_std", from_vector(model.traj_normalizer().std)},
      {"obs_mean", from_vector(model.obs_normalizer().mean)},
      {"obs_std", from_vector(model.obs_normalizer().std)},
  };
  j["params"] = from_vector(model.parameters());
  j["meta"] = {
      {"seed", model.meta.seed},
      {"epochs", model.meta.epochs},
      {"first_loss", model.meta.first_loss},
      {"final_loss", model.meta.final_loss},
      {"epoch_losses", model.meta.epoch_losses},
  };
  write_file(path, j.dump() + "\n");
}

DenoiserModel load_model(const std::string& path) {
  const json j = parse_file(path);
  try {
    if (j.value("format", "") != kModelFormat) {
      throw DataError("not a dsekit model file: " + path);
    }
    if (j.value("activation", "silu") != std::string("silu")) {
      throw DataError("unsupported activation in " + path);
    }
    const VectorXd betas = to_vector(j.at("schedule").at("betas"), "betas");
    const NoiseSchedule schedule =
        NoiseSchedule::from_alphas(VectorXd::Ones(betas.size()) - betas);
    Normalizer traj_norm, obs_norm;
    traj_norm.mean = to_vector(j.at("normalizer").at("traj_mean"), "traj_mean");
    traj_norm.std = to_vector(j.at("normalizer").at("traj_std"), "traj_std");
    obs_norm.mean = to_vector(j.at("normalizer").at("obs_mean"), "obs_mean");
    obs_norm.std = to_vector(j.at("normalizer").at("obs_std"), "obs_std");

    DenoiserModel model(
        j.at("traj_len").get<int>(), j.at("dof").get<int>(),
        j.at("dt").get<double>(), schedule, std::move(traj_norm),
        std::move(obs_norm), j.at("hidden").get<std::vector<int>>(),
        j.at("time_embed_dim").get<int>(), j.value("label", ""));
    model.set_parameters(to_vector(j.at("params"), "params"));
    if (j.contains("meta")) {
      const json& m = j.at("meta");
      model.meta.seed = m.value("seed", std::uint64_t{0});
      model.meta.epochs = m.value("epochs", 0);
      model.meta.first_loss = m.value("first_loss", 0.0);
      model.meta.final_loss = m.value("final_loss", 0.0);
      model.meta.epoch_losses = m.value("epoch_losses", std::vector<double>{});
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError("bad model file " + path + ": " + e.what());
  } catch (const ContractViolation& e) {
    throw DataError("bad model file " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Ensemble manifests and weights
// ---------------------------------------------------------------------------

std::vector<std::shared_ptr<const DenoiserModel>> load_manifest(
    const std::string& path) {
  const json j = parse_file(path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<std::shared_ptr<const DenoiserModel>> models;
  try {
    for (const auto& entry : j.at("models")) {
      fs::path mp(entry.at("path").get<std::string>());
      if (mp.is_relative()) mp = base / mp;
      auto model = std::make_shared<DenoiserModel>(load_model(mp.string()));
      if (entry.contains("label")) {
        model->set_label(entry.at("label").get<std::string>());
      }
      models.push_back(std::move(model));
    }
  } catch (const json::exception& e) {
    throw DataError("bad manifest " + path + ": " + e.what());
  }
  if (models.empty()) throw DataError("manifest lists no models: " + path);
  return models;
}

void save_manifest(const std::vector<std::string>& model_paths,
                   const std::vector<std::string>& labels,
                   const std::string& path) {
  if (!labels.empty() && labels.size() != model_paths.size()) {
    throw ContractViolation("one label per model path required");
  }
  json j;
  j["models"] = json::array();
  for (std::size_t i = 0; i < model_paths.size(); ++i) {
    json entry;
    entry["path"] = model_paths[i];
    if (!labels.empty()) entry["label"] = labels[i];
    j["models"].push_back(entry);
  }
  write_file(path, j.dump(2) + "\n");
}

CompositionWeights parse_weights(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(tok, &pos);
      while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
      if (pos != tok.size()) throw std::invalid_argument(tok);
      vals.push_back(v);
    } catch (const std::exception&) {
      throw ContractViolation("cannot parse weight: '" + tok + "'");
    }
  }
  if (vals.empty()) throw ContractViolation("empty weight list");
  VectorXd w(static_cast<int>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) w(static_cast<int>(i)) = vals[i];
  return CompositionWeights(std::move(w));
}

}  // namespace dsekit
