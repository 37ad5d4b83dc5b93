#include "seglab/state.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "seglab/errors.hpp"

namespace seglab {

void SystemConfig::validate(int dim) const {
  if (l < 1) throw ConfigError("system: l must be >= 1");
  if (gamma < 1.0) throw ConfigError("system: gamma must be >= 1");
  if (gamma * dim / (gamma + 1.0) >= 2.0)
    throw ConfigError("system: subcriticality gamma*dim/(gamma+1) < 2 violated");
  if (beta > 0.0) throw ConfigError("system: beta must be <= 0 (competition)");
}

namespace {

GridState build_state(Grid g, CoefficientSpec spec, SystemConfig sys,
                      std::vector<GridField> fields, bool solution_like) {
  spec.validate();
  sys.validate(g.dim);
  if (spec.dim != g.dim) throw ConfigError("state: spec/grid dimension mismatch");
  if (int(fields.size()) != sys.l) throw ConfigError("state: field count differs from l");
  if (solution_like && sys.l < 2) throw ConfigError("state: solutions need l >= 2");
  for (const GridField& f : fields) {
    if (!f.grid.same_layout(g)) throw ConfigError("state: field grid layout mismatch");
    if (f.v.size() != g.node_count()) throw ConfigError("state: field size mismatch");
    for (double x : f.v)
      if (!std::isfinite(x)) throw ConfigError("state: non-finite field value");
    if (solution_like && f.min_value() < 0.0)
      throw ConfigError("state: solution fields must be nonnegative");
  }
  GridState s;
  s.grid = g;
  s.spec = spec;
  s.sys = sys;
  s.u = std::move(fields);
  s.solution_like = solution_like;
  return s;
}

}  // namespace

GridState GridState::solution(Grid g, CoefficientSpec spec, SystemConfig sys,
                              std::vector<GridField> fields) {
  return build_state(g, spec, sys, std::move(fields), true);
}

GridState GridState::diagnostic(Grid g, CoefficientSpec spec, SystemConfig sys,
                                std::vector<GridField> fields) {
  return build_state(g, spec, sys, std::move(fields), false);
}

void save_state(const GridState& s, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::ordered_json j;
  j["kind"] = s.solution_like ? "solution" : "diagnostic";
  j["grid"] = {{"dim", s.grid.dim},
               {"box_half", s.grid.box_half},
               {"nodes_per_axis", s.grid.n},
               {"spacing", s.grid.h}};
  j["system"] = {{"l", s.sys.l}, {"gamma", s.sys.gamma}, {"beta", s.sys.beta}};
  j["spec"] = {{"dim", s.spec.dim},
               {"matrix_family", matrix_family_name(s.spec.matrix_family)},
               {"matrix_eps", s.spec.matrix_eps},
               {"weight_family", weight_family_name(s.spec.weight_family)},
               {"weight_base", s.spec.weight_base},
               {"reaction_family", reaction_family_name(s.spec.reaction_family)},
               {"reaction_d", s.spec.reaction_d},
               {"reaction_m", s.spec.reaction_m},
               {"box_half", s.spec.box_half},
               {"lift_2d", s.spec.lift_2d}};
  if (s.spec.framed) {
    nlohmann::ordered_json fr;
    std::vector<double> center(s.spec.dim);
    for (int k = 0; k < s.spec.dim; ++k) center[std::size_t(k)] = s.spec.frame_center[k];
    fr["center"] = center;
    fr["scale"] = s.spec.frame_scale;
    std::vector<double> lower;  // S row-major lower triangle; Sinv is recomputed on load
    for (int i = 0; i < s.spec.dim; ++i)
      for (int k = 0; k <= i; ++k) lower.push_back(s.spec.frame_S(i, k));
    fr["S_lower"] = lower;
    fr["f_scale"] = s.spec.frame_f_scale;
    fr["s_scale"] = s.spec.frame_s_scale;
    j["spec"]["frame"] = fr;
  }
  j["layout"] = "fields concatenated, component-major, row-major nodes, little-endian float64";

  std::ofstream sidecar(fs::path(dir) / "state.json");
  if (!sidecar) throw ConfigError("save_state: cannot write sidecar in " + dir);
  sidecar << j.dump(2) << "\n";

  std::ofstream bin(fs::path(dir) / "state.bin", std::ios::binary);
  if (!bin) throw ConfigError("save_state: cannot write state.bin in " + dir);
  for (const GridField& f : s.u)
    bin.write(reinterpret_cast<const char*>(f.v.data()),
              std::streamsize(f.v.size() * sizeof(double)));
}

GridState load_state(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream sidecar(fs::path(dir) / "state.json");
  if (!sidecar) throw ConfigError("load_state: missing state.json in " + dir);
  nlohmann::json j;
  try {
    sidecar >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("load_state: bad sidecar: ") + e.what());
  }

  Grid g;
  CoefficientSpec spec;
  SystemConfig sys;
  bool solution_like = true;
  try {
    g = Grid::make(j.at("grid").at("dim").get<int>(), j.at("grid").at("box_half").get<double>(),
                   j.at("grid").at("nodes_per_axis").get<int>());
    sys.l = j.at("system").at("l").get<int>();
    sys.gamma = j.at("system").at("gamma").get<double>();
    sys.beta = j.at("system").at("beta").get<double>();
    const auto& sp = j.at("spec");
    spec.dim = sp.at("dim").get<int>();
    spec.matrix_family = matrix_family_from_name(sp.at("matrix_family").get<std::string>());
    spec.matrix_eps = sp.at("matrix_eps").get<double>();
    spec.weight_family = weight_family_from_name(sp.at("weight_family").get<std::string>());
    spec.weight_base = sp.at("weight_base").get<double>();
    spec.reaction_family = reaction_family_from_name(sp.at("reaction_family").get<std::string>());
    spec.reaction_d = sp.at("reaction_d").get<double>();
    spec.reaction_m = sp.at("reaction_m").get<double>();
    spec.box_half = sp.at("box_half").get<double>();
    spec.lift_2d = sp.value("lift_2d", false);
    if (sp.contains("frame")) {
      const auto& fr = sp.at("frame");
      spec.framed = true;
      spec.frame_center = Vec::zero(spec.dim);
      const auto center = fr.at("center").get<std::vector<double>>();
      if (int(center.size()) != spec.dim)
        throw ConfigError("load_state: frame center dimension mismatch");
      for (int k = 0; k < spec.dim; ++k) spec.frame_center[k] = center[std::size_t(k)];
      spec.frame_scale = fr.at("scale").get<double>();
      const auto lower = fr.at("S_lower").get<std::vector<double>>();
      if (int(lower.size()) != spec.dim * (spec.dim + 1) / 2)
        throw ConfigError("load_state: frame S triangle size mismatch");
      spec.frame_S = SymMatrix::zero(spec.dim);
      std::size_t at = 0;
      for (int i = 0; i < spec.dim; ++i)
        for (int k = 0; k <= i; ++k) spec.frame_S.set(i, k, lower[at++]);
      spec.frame_Sinv = matrix_inverse(spec.frame_S);
      spec.frame_f_scale = fr.at("f_scale").get<double>();
      spec.frame_s_scale = fr.at("s_scale").get<double>();
    }
    solution_like = j.at("kind").get<std::string>() == "solution";
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("load_state: sidecar schema: ") + e.what());
  }

  std::ifstream bin(fs::path(dir) / "state.bin", std::ios::binary);
  if (!bin) throw ConfigError("load_state: missing state.bin in " + dir);
  std::vector<GridField> fields;
  for (int c = 0; c < sys.l; ++c) {
    GridField f = GridField::zeros(g);
    bin.read(reinterpret_cast<char*>(f.v.data()), std::streamsize(f.v.size() * sizeof(double)));
    if (std::size_t(bin.gcount()) != f.v.size() * sizeof(double))
      throw ConfigError("load_state: state.bin truncated");
    fields.push_back(std::move(f));
  }
  char extra;
  if (bin.read(&extra, 1))
    throw ConfigError("load_state: state.bin larger than sidecar describes");

  return solution_like ? GridState::solution(g, spec, sys, std::move(fields))
                       : GridState::diagnostic(g, spec, sys, std::move(fields));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  f_ = std::fopen(path.c_str(), "wb");
  if (!f_) throw ConfigError("csv: cannot open " + path);
}

CsvWriter::~CsvWriter() {
  if (f_) std::fclose(static_cast<FILE*>(f_));
}

void CsvWriter::header(const std::vector<std::string>& names) {
  FILE* f = static_cast<FILE*>(f_);
  for (std::size_t i = 0; i < names.size(); ++i)
    std::fprintf(f, "%s%s", names[i].c_str(), i + 1 < names.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<double>& values) {
  FILE* f = static_cast<FILE*>(f_);
  for (std::size_t i = 0; i < values.size(); ++i)
    std::fprintf(f, "%s%s", format_double(values[i]).c_str(), i + 1 < values.size() ? "," : "\n");
}

}  // namespace seglab
