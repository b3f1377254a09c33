#include "kernelrn/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace kernelrn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string s = "invalid config";
  for (const auto& e : errors) s += "\n  " + e;
  return s;
}

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string item(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Collects errors with field paths instead of stopping at the first one.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        fail(child(path, key), "unknown field");
      }
    }
    return true;
  }

  std::optional<double> real(const json& j, const std::string& path) {
    if (!j.is_number()) {
      fail(path, "expected a number");
      return std::nullopt;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      fail(path, "must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<double> positive(const json& j, const std::string& path) {
    auto v = real(j, path);
    if (v && !(*v > 0.0)) {
      fail(path, "must be > 0");
      return std::nullopt;
    }
    return v;
  }

  std::optional<std::uint64_t> count(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) {
      // documents built in code store small integers as signed
      if (j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
      fail(path, "must be >= 0");
      return std::nullopt;
    }
    fail(path, "expected a non-negative integer");
    return std::nullopt;
  }

  std::optional<Complex> complex(const json& j, const std::string& path) {
    if (j.is_number()) {
      auto v = real(j, path);
      return v ? std::optional<Complex>(Complex(*v, 0.0)) : std::nullopt;
    }
    if (j.is_array() && j.size() == 2) {
      auto re = real(j[0], item(path, 0));
      auto im = real(j[1], item(path, 1));
      if (re && im) return Complex(*re, *im);
      return std::nullopt;
    }
    fail(path, "expected a number or a [re, im] pair");
    return std::nullopt;
  }

  std::optional<std::string> string(const json& j, const std::string& path) {
    if (!j.is_string()) {
      fail(path, "expected a string");
      return std::nullopt;
    }
    return j.get<std::string>();
  }

  std::optional<std::vector<std::size_t>> sizes(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
      fail(path, "expected a nonempty array of positive integers");
      return std::nullopt;
    }
    std::vector<std::size_t> out;
    bool ok = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto v = count(j[i], item(path, i));
      if (!v || *v == 0) {
        if (v) fail(item(path, i), "must be >= 1");
        ok = false;
        continue;
      }
      out.push_back(static_cast<std::size_t>(*v));
    }
    return ok ? std::optional(out) : std::nullopt;
  }

  std::optional<ComplexMatrix> matrix(const json& j, const std::string& path) {
    if (j.is_object()) {
      if (!object(j, path, {"identity", "scale"})) return std::nullopt;
      if (!j.contains("identity")) {
        fail(child(path, "identity"), "required");
        return std::nullopt;
      }
      auto n = count(j["identity"], child(path, "identity"));
      std::optional<Complex> s = Complex(1.0);
      if (j.contains("scale")) s = complex(j["scale"], child(path, "scale"));
      if (!n || !s) return std::nullopt;
      if (*n == 0) {
        fail(child(path, "identity"), "must be >= 1");
        return std::nullopt;
      }
      const auto k = static_cast<Eigen::Index>(*n);
      return ComplexMatrix((*s) * ComplexMatrix::Identity(k, k));
    }
    if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
      fail(path, "expected a nonempty array of rows or {identity, scale}");
      return std::nullopt;
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    ComplexMatrix m(rows, cols);
    bool ok = true;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& row = j[static_cast<std::size_t>(r)];
      const auto rp = item(path, static_cast<std::size_t>(r));
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
        fail(rp, "rows must all have " + std::to_string(cols) + " entries");
        ok = false;
        continue;
      }
      for (Eigen::Index c = 0; c < cols; ++c) {
        auto v = complex(row[static_cast<std::size_t>(c)], item(rp, static_cast<std::size_t>(c)));
        if (v) {
          m(r, c) = *v;
        } else {
          ok = false;
        }
      }
    }
    return ok ? std::optional(m) : std::nullopt;
  }
};

std::optional<EnsembleSpec> read_ensemble(Reader& rd, const json& j) {
  const std::string p = "ensemble";
  if (!j.is_object()) {
    rd.fail(p, "expected an object");
    return std::nullopt;
  }
  if (!j.contains("type")) {
    rd.fail(child(p, "type"), "required");
    return std::nullopt;
  }
  auto type = rd.string(j["type"], child(p, "type"));
  if (!type) return std::nullopt;
  const std::size_t before = rd.errors.size();
  auto need = [&](const char* key) -> const json* {
    if (!j.contains(key)) {
      rd.fail(child(p, key), "required");
      return nullptr;
    }
    return &j[key];
  };
  auto read_n = [&]() -> std::size_t {
    const json* v = need("n");
    if (!v) return 0;
    auto n = rd.count(*v, child(p, "n"));
    if (n && *n == 0) rd.fail(child(p, "n"), "must be >= 1");
    return n ? static_cast<std::size_t>(*n) : 0;
  };
  auto read_pos = [&](const char* key) -> double {
    const json* v = need(key);
    if (!v) return 0.0;
    auto x = rd.positive(*v, child(p, key));
    return x.value_or(0.0);
  };

  EnsembleSpec spec;
  if (*type == "ginibre") {
    rd.object(j, p, {"type", "n", "tau"});
    spec = Ginibre{read_n(), read_pos("tau")};
  } else if (*type == "ginibre_raw") {
    rd.object(j, p, {"type", "n", "sigma2"});
    spec = GinibreRaw{read_n(), read_pos("sigma2")};
  } else if (*type == "haar") {
    rd.object(j, p, {"type", "n"});
    spec = HaarUnitary{read_n()};
  } else if (*type == "ginibre_tuple") {
    rd.object(j, p, {"type", "d", "n", "tau"});
    std::size_t d = 0;
    if (const json* v = need("d")) {
      auto x = rd.count(*v, child(p, "d"));
      if (x && *x == 0) rd.fail(child(p, "d"), "must be >= 1");
      d = x.value_or(0);
    }
    spec = GinibreTuple{d, read_n(), read_pos("tau")};
  } else if (*type == "block_ginibre") {
    rd.object(j, p, {"type", "sizes", "tau"});
    BlockGinibre bg;
    if (const json* v = need("sizes")) bg.sizes = rd.sizes(*v, child(p, "sizes")).value_or(std::vector<std::size_t>{});
    if (const json* v = need("tau")) {
      const auto tp = child(p, "tau");
      if (!v->is_array() || v->empty()) {
        rd.fail(tp, "expected a square array of variances");
      } else {
        for (std::size_t r = 0; r < v->size(); ++r) {
          const auto& row = (*v)[r];
          if (!row.is_array()) {
            rd.fail(item(tp, r), "expected an array");
            continue;
          }
          std::vector<double> vals;
          for (std::size_t s = 0; s < row.size(); ++s) {
            auto x = rd.real(row[s], item(item(tp, r), s));
            if (x && *x < 0.0) rd.fail(item(item(tp, r), s), "must be >= 0");
            vals.push_back(x.value_or(0.0));
          }
          bg.tau.push_back(std::move(vals));
        }
      }
    }
    spec = std::move(bg);
  } else if (*type == "deterministic") {
    rd.object(j, p, {"type", "matrices"});
    Deterministic det;
    if (const json* v = need("matrices")) {
      const auto mp = child(p, "matrices");
      if (!v->is_array() || v->empty()) {
        rd.fail(mp, "expected a nonempty array of matrices");
      } else {
        for (std::size_t i = 0; i < v->size(); ++i) {
          if (auto m = rd.matrix((*v)[i], item(mp, i))) det.matrices.push_back(std::move(*m));
        }
      }
    }
    spec = std::move(det);
  } else {
    rd.fail(child(p, "type"), "unknown ensemble \"" + *type +
                                  "\" (expected ginibre, ginibre_raw, haar, block_ginibre, ginibre_tuple or deterministic)");
    return std::nullopt;
  }
  if (rd.errors.size() != before) return std::nullopt;
  try {
    validate(spec);
  } catch (const std::exception& e) {
    rd.fail(p, e.what());
    return std::nullopt;
  }
  return spec;
}

std::optional<SubalgebraSpec> read_subalgebra(Reader& rd, const json& j, const std::string& p, std::size_t n) {
  std::string type;
  if (j.is_string()) {
    type = j.get<std::string>();
  } else if (j.is_object()) {
    rd.object(j, p, {"type", "sizes"});
    if (!j.contains("type")) {
      rd.fail(child(p, "type"), "required");
      return std::nullopt;
    }
    auto t = rd.string(j["type"], child(p, "type"));
    if (!t) return std::nullopt;
    type = *t;
  } else {
    rd.fail(p, "expected a name or an object");
    return std::nullopt;
  }
  if (type == "full") return SubalgebraSpec::full();
  if (type == "diagonal") return SubalgebraSpec::diagonal();
  if (type == "scalar") return SubalgebraSpec::scalar();
  if (type == "blocks") {
    if (!j.is_object() || !j.contains("sizes")) {
      rd.fail(child(p, "sizes"), "required for blocks");
      return std::nullopt;
    }
    auto sizes = rd.sizes(j["sizes"], child(p, "sizes"));
    if (!sizes) return std::nullopt;
    const auto total = std::accumulate(sizes->begin(), sizes->end(), std::size_t{0});
    if (n > 0 && total != n) {
      rd.fail(child(p, "sizes"), "sizes must sum to n (got " + std::to_string(total) + ", n = " + std::to_string(n) + ")");
      return std::nullopt;
    }
    return SubalgebraSpec::blocks(*sizes);
  }
  rd.fail(child(p, "type"), "unknown subalgebra \"" + type + "\" (expected full, diagonal, blocks or scalar)");
  return std::nullopt;
}

void read_tolerances(Reader& rd, const json& j, const std::string& p, RnTolerances& t) {
  if (!rd.object(j, p, {"psd_clip_tol", "rank_tol", "density_tol", "leak_tol"})) return;
  auto set = [&](const char* key, double& field) {
    if (!j.contains(key)) return;
    if (auto v = rd.positive(j[key], child(p, key))) field = *v;
  };
  set("psd_clip_tol", t.psd_clip_tol);
  set("rank_tol", t.rank_tol);
  set("density_tol", t.density_tol);
  set("leak_tol", t.leak_tol);
}

void read_analysis(Reader& rd, const json& j, RunConfig& cfg, const std::optional<EnsembleSpec>& ens) {
  const std::string p = "analysis";
  auto& a = cfg.analysis;
  const std::size_t n = ens ? dimension(*ens) : 0;
  if (ens) {
    if (const auto* bg = std::get_if<BlockGinibre>(&*ens)) a.subalgebra = SubalgebraSpec::blocks(bg->sizes);
  }
  if (j.is_null()) return;
  if (!rd.object(j, p, {"max_order", "subalgebra", "enforce", "z", "tolerances", "d_sequence"})) return;
  if (j.contains("max_order")) {
    if (auto v = rd.count(j["max_order"], child(p, "max_order"))) a.max_order = static_cast<std::size_t>(*v);
  }
  if (j.contains("subalgebra")) {
    if (auto b = read_subalgebra(rd, j["subalgebra"], child(p, "subalgebra"), n)) a.subalgebra = *b;
  }
  if (j.contains("enforce")) {
    if (auto s = rd.string(j["enforce"], child(p, "enforce"))) {
      try {
        a.enforce = parse_enforcement(*s);
      } catch (const std::invalid_argument& e) {
        rd.fail(child(p, "enforce"), e.what());
      }
    }
  }
  if (j.contains("z")) {
    if (auto v = rd.positive(j["z"], child(p, "z"))) a.z = *v;
  }
  if (j.contains("d_sequence")) {
    if (!j["d_sequence"].is_boolean()) {
      rd.fail(child(p, "d_sequence"), "expected true or false");
    } else {
      a.d_sequence = j["d_sequence"].get<bool>();
    }
  }
  if (j.contains("tolerances")) read_tolerances(rd, j["tolerances"], child(p, "tolerances"), a.tolerances);

  if (ens && a.enforce != Enforcement::none && !phase_invariant(*ens)) {
    rd.fail(child(p, "enforce"), "symmetry enforcement needs a phase-invariant ensemble, not " + ensemble_name(*ens));
  }
  if (a.enforce == Enforcement::block && a.subalgebra.kind() != SubalgebraSpec::Kind::blocks) {
    rd.fail(child(p, "enforce"), "block enforcement needs a blocks subalgebra");
  }
}

std::optional<YSpec> read_y(Reader& rd, const json& j, const std::string& p) {
  YSpec y;
  if (j.is_string()) {
    if (j.get<std::string>() == "identity") return y;
    rd.fail(p, "unknown Y \"" + j.get<std::string>() + "\"");
    return std::nullopt;
  }
  if (!rd.object(j, p, {"type", "block", "values", "matrix"})) return std::nullopt;
  if (!j.contains("type")) {
    rd.fail(child(p, "type"), "required");
    return std::nullopt;
  }
  auto type = rd.string(j["type"], child(p, "type"));
  if (!type) return std::nullopt;
  if (*type == "identity") {
    y.kind = YSpec::Kind::identity;
  } else if (*type == "block_projection") {
    y.kind = YSpec::Kind::block_projection;
    if (!j.contains("block")) {
      rd.fail(child(p, "block"), "required");
      return std::nullopt;
    }
    auto b = rd.count(j["block"], child(p, "block"));
    if (!b) return std::nullopt;
    if (*b == 0) {
      rd.fail(child(p, "block"), "blocks are numbered from 1");
      return std::nullopt;
    }
    y.block = static_cast<std::size_t>(*b);
  } else if (*type == "diagonal") {
    y.kind = YSpec::Kind::diagonal;
    if (!j.contains("values") || !j["values"].is_array()) {
      rd.fail(child(p, "values"), "required array of non-negative numbers");
      return std::nullopt;
    }
    for (std::size_t i = 0; i < j["values"].size(); ++i) {
      auto v = rd.real(j["values"][i], item(child(p, "values"), i));
      if (v && *v < 0.0) rd.fail(item(child(p, "values"), i), "must be >= 0");
      y.values.push_back(v.value_or(0.0));
    }
  } else if (*type == "matrix") {
    y.kind = YSpec::Kind::matrix;
    if (!j.contains("matrix")) {
      rd.fail(child(p, "matrix"), "required");
      return std::nullopt;
    }
    auto m = rd.matrix(j["matrix"], child(p, "matrix"));
    if (!m) return std::nullopt;
    y.matrix = *m;
  } else {
    rd.fail(child(p, "type"), "unknown Y \"" + *type + "\" (expected identity, block_projection, diagonal or matrix)");
    return std::nullopt;
  }
  return y;
}

std::optional<VnConfig> read_vn(Reader& rd, const json& j, const std::optional<EnsembleSpec>& ens,
                                const SubalgebraSpec& b) {
  const std::string p = "vn";
  if (!rd.object(j, p, {"polynomial", "y", "depth", "vector"})) return std::nullopt;
  const std::size_t before = rd.errors.size();
  VnConfig vn;

  const std::string pp = child(p, "polynomial");
  if (!j.contains("polynomial")) {
    rd.fail(pp, "required");
  } else if (rd.object(j["polynomial"], pp, {"d", "terms"})) {
    const auto& pj = j["polynomial"];
    std::size_t d = ens ? generator_count(*ens) : 1;
    if (pj.contains("d")) {
      if (auto v = rd.count(pj["d"], child(pp, "d"))) {
        if (ens && *v != generator_count(*ens)) {
          rd.fail(child(pp, "d"), "must equal the ensemble's generator count " + std::to_string(generator_count(*ens)));
        } else if (*v == 0) {
          rd.fail(child(pp, "d"), "must be >= 1");
        } else {
          d = static_cast<std::size_t>(*v);
        }
      }
    }
    NcPolynomial f(d);
    const std::string tp = child(pp, "terms");
    if (!pj.contains("terms") || !pj["terms"].is_array() || pj["terms"].empty()) {
      rd.fail(tp, "required nonempty array of {word, coeff}");
    } else {
      for (std::size_t i = 0; i < pj["terms"].size(); ++i) {
        const auto& t = pj["terms"][i];
        const auto ip = item(tp, i);
        if (!rd.object(t, ip, {"word", "coeff"})) continue;
        if (!t.contains("word") || !t.contains("coeff")) {
          rd.fail(ip, "needs both word and coeff");
          continue;
        }
        auto ws = rd.string(t["word"], child(ip, "word"));
        auto c = rd.complex(t["coeff"], child(ip, "coeff"));
        if (!ws || !c) continue;
        try {
          f.add(parse_word(*ws), *c);
        } catch (const std::exception& e) {
          rd.fail(child(ip, "word"), e.what());
        }
      }
      if (f.terms().empty() && rd.errors.size() == before) rd.fail(tp, "terms cancel to the zero polynomial");
    }
    vn.polynomial = f;
    ordered_json terms = ordered_json::array();
    for (const auto& [w, c] : f.terms()) {
      terms.push_back({{"word", w.to_string()}, {"coeff", {c.real(), c.imag()}}});
    }
    vn.polynomial_json = {{"d", d}, {"terms", terms}};
  }

  if (j.contains("y")) {
    if (auto y = read_y(rd, j["y"], child(p, "y"))) vn.y = *y;
  }
  if (j.contains("depth")) {
    if (auto v = rd.count(j["depth"], child(p, "depth"))) vn.depth = static_cast<std::size_t>(*v);
  }
  if (j.contains("vector")) {
    const auto vp = child(p, "vector");
    const auto& vj = j["vector"];
    if (!vj.is_array() || vj.empty()) {
      rd.fail(vp, "expected a nonempty array");
    } else {
      ComplexVector v(static_cast<Eigen::Index>(vj.size()));
      for (std::size_t i = 0; i < vj.size(); ++i) v(static_cast<Eigen::Index>(i)) = rd.complex(vj[i], item(vp, i)).value_or(0.0);
      if (ens && static_cast<std::size_t>(v.size()) != dimension(*ens)) {
        rd.fail(vp, "length must equal n = " + std::to_string(dimension(*ens)));
      } else if (v.squaredNorm() == 0.0) {
        rd.fail(vp, "must be nonzero");
      }
      vn.vector = v;
    }
  }
  if (rd.errors.size() != before) return std::nullopt;
  if (ens) {
    try {
      (void)build_y(vn.y, dimension(*ens), b);
    } catch (const std::exception& e) {
      rd.fail(child(p, "y"), e.what());
      return std::nullopt;
    }
  }
  return vn;
}

ordered_json complex_json(Complex c) { return ordered_json::array({c.real(), c.imag()}); }

ordered_json matrix_json(const ComplexMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json ensemble_json(const EnsembleSpec& spec) {
  return std::visit(
      [](const auto& e) -> ordered_json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Ginibre>) {
          return {{"type", "ginibre"}, {"n", e.n}, {"tau", e.tau}};
        } else if constexpr (std::is_same_v<T, GinibreRaw>) {
          return {{"type", "ginibre_raw"}, {"n", e.n}, {"sigma2", e.sigma2}};
        } else if constexpr (std::is_same_v<T, HaarUnitary>) {
          return {{"type", "haar"}, {"n", e.n}};
        } else if constexpr (std::is_same_v<T, BlockGinibre>) {
          return {{"type", "block_ginibre"}, {"sizes", e.sizes}, {"tau", e.tau}};
        } else if constexpr (std::is_same_v<T, GinibreTuple>) {
          return {{"type", "ginibre_tuple"}, {"d", e.d}, {"n", e.n}, {"tau", e.tau}};
        } else {
          ordered_json ms = ordered_json::array();
          for (const auto& m : e.matrices) ms.push_back(matrix_json(m));
          return {{"type", "deterministic"}, {"matrices", ms}};
        }
      },
      spec);
}

ordered_json subalgebra_json(const SubalgebraSpec& b) {
  ordered_json j = {{"type", b.name()}};
  if (b.kind() == SubalgebraSpec::Kind::blocks) j["sizes"] = b.sizes();
  return j;
}

ordered_json y_json(const YSpec& y) {
  switch (y.kind) {
    case YSpec::Kind::identity:
      return {{"type", "identity"}};
    case YSpec::Kind::block_projection:
      return {{"type", "block_projection"}, {"block", y.block}};
    case YSpec::Kind::diagonal:
      return {{"type", "diagonal"}, {"values", y.values}};
    case YSpec::Kind::matrix:
      return {{"type", "matrix"}, {"matrix", matrix_json(y.matrix)}};
  }
  return {};
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

ComplexMatrix build_y(const YSpec& y, std::size_t n, const SubalgebraSpec& b) {
  const auto k = static_cast<Eigen::Index>(n);
  switch (y.kind) {
    case YSpec::Kind::identity:
      return ComplexMatrix::Identity(k, k);
    case YSpec::Kind::block_projection: {
      if (b.kind() != SubalgebraSpec::Kind::blocks) {
        throw std::invalid_argument("block_projection needs a blocks subalgebra");
      }
      const auto parts = b.partition(n);
      if (y.block > parts.size()) {
        throw std::invalid_argument("block " + std::to_string(y.block) + " does not exist; the subalgebra has " +
                                    std::to_string(parts.size()) + " blocks");
      }
      ComplexMatrix p = ComplexMatrix::Zero(k, k);
      const auto [offset, size] = parts[y.block - 1];
      p.block(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(size),
              static_cast<Eigen::Index>(size))
          .setIdentity();
      return p;
    }
    case YSpec::Kind::diagonal: {
      if (y.values.size() != n) {
        throw DimensionError("diagonal Y needs " + std::to_string(n) + " values, got " + std::to_string(y.values.size()));
      }
      RealVector v = Eigen::Map<const RealVector>(y.values.data(), k);
      return v.cast<Complex>().asDiagonal();
    }
    case YSpec::Kind::matrix: {
      if (y.matrix.rows() != k || y.matrix.cols() != k) {
        throw DimensionError("Y must be " + std::to_string(n) + "x" + std::to_string(n));
      }
      if (!b.contains(y.matrix, 1e-12 * (1.0 + y.matrix.norm()))) {
        throw std::invalid_argument("Y does not belong to the " + b.name() + " subalgebra");
      }
      const auto v = psd_verdict(y.matrix, 1e-12 * (1.0 + y.matrix.norm()));
      if (!v.is_psd) throw std::invalid_argument("Y is not positive semidefinite");
      return y.matrix;
    }
  }
  return ComplexMatrix::Identity(k, k);
}

std::optional<double> ensemble_tau(const EnsembleSpec& spec) {
  if (const auto* g = std::get_if<Ginibre>(&spec)) return g->tau;
  if (const auto* g = std::get_if<GinibreRaw>(&spec)) return g->sigma2 * static_cast<double>(g->n);
  if (const auto* g = std::get_if<GinibreTuple>(&spec)) return g->tau;
  return std::nullopt;
}

RunConfig parse_config(const json& doc) {
  Reader rd;
  RunConfig cfg;
  if (!rd.object(doc, "config", {"ensemble", "samples", "seed", "workers", "analysis", "vn", "output"})) {
    throw ConfigError(rd.errors);
  }

  std::optional<EnsembleSpec> ens;
  if (!doc.contains("ensemble")) {
    rd.fail("ensemble", "required");
  } else {
    ens = read_ensemble(rd, doc["ensemble"]);
  }
  if (ens) cfg.ensemble = *ens;

  if (!doc.contains("samples")) {
    rd.fail("samples", "required");
  } else if (auto s = rd.count(doc["samples"], "samples")) {
    if (*s < 2) rd.fail("samples", "must be >= 2");
    cfg.samples = static_cast<std::size_t>(*s);
  }
  if (!doc.contains("seed")) {
    rd.fail("seed", "required");
  } else if (auto s = rd.count(doc["seed"], "seed")) {
    cfg.seed = *s;
  }
  if (doc.contains("workers")) {
    if (auto w = rd.count(doc["workers"], "workers")) cfg.workers = static_cast<unsigned>(*w);
  }

  read_analysis(rd, doc.contains("analysis") ? doc["analysis"] : json(), cfg, ens);

  if (doc.contains("vn")) cfg.vn = read_vn(rd, doc["vn"], ens, cfg.analysis.subalgebra);

  if (doc.contains("output")) {
    const auto& o = doc["output"];
    if (rd.object(o, "output", {"directory", "formats"})) {
      if (o.contains("directory")) {
        if (auto d = rd.string(o["directory"], "output.directory")) cfg.output.directory = *d;
      }
      if (o.contains("formats")) {
        const auto& f = o["formats"];
        if (!f.is_array()) {
          rd.fail("output.formats", "expected an array of \"json\" and/or \"csv\"");
        } else {
          cfg.output.json = cfg.output.csv = false;
          for (std::size_t i = 0; i < f.size(); ++i) {
            auto s = rd.string(f[i], item("output.formats", i));
            if (!s) continue;
            if (*s == "json") {
              cfg.output.json = true;
            } else if (*s == "csv") {
              cfg.output.csv = true;
            } else {
              rd.fail(item("output.formats", i), "unknown format \"" + *s + "\"");
            }
          }
        }
      }
    }
  }

  if (!rd.errors.empty()) throw ConfigError(rd.errors);
  cfg.ensemble_json = ensemble_json(cfg.ensemble);
  if (cfg.vn) cfg.vn->y_json = y_json(cfg.vn->y);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot open file"});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  return parse_config(doc);
}

ordered_json config_to_json(const RunConfig& cfg) {
  const auto& a = cfg.analysis;
  ordered_json j;
  j["ensemble"] = cfg.ensemble_json;
  j["samples"] = cfg.samples;
  j["seed"] = cfg.seed;
  j["analysis"] = {{"max_order", a.max_order},
                   {"subalgebra", subalgebra_json(a.subalgebra)},
                   {"enforce", to_string(a.enforce)},
                   {"z", a.z},
                   {"d_sequence", a.d_sequence},
                   {"tolerances",
                    {{"psd_clip_tol", a.tolerances.psd_clip_tol},
                     {"rank_tol", a.tolerances.rank_tol},
                     {"density_tol", a.tolerances.density_tol},
                     {"leak_tol", a.tolerances.leak_tol}}}};
  if (cfg.vn) {
    ordered_json vn = {{"polynomial", cfg.vn->polynomial_json}, {"y", cfg.vn->y_json}};
    vn["depth"] = cfg.vn->depth ? ordered_json(*cfg.vn->depth) : ordered_json("auto");
    if (cfg.vn->vector) {
      ordered_json v = ordered_json::array();
      for (Eigen::Index i = 0; i < cfg.vn->vector->size(); ++i) v.push_back(complex_json((*cfg.vn->vector)(i)));
      vn["vector"] = v;
    }
    j["vn"] = vn;
  }
  ordered_json formats = ordered_json::array();
  if (cfg.output.json) formats.push_back("json");
  if (cfg.output.csv) formats.push_back("csv");
  j["output"] = {{"formats", formats}};
  return j;
}

}  // namespace kernelrn
