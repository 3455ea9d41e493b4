#include "ahr/dataset_io.hpp"

#include "ahr/error.hpp"
#include "ahr/text.hpp"

#include <fstream>
#include <sstream>

namespace ahr {

namespace fs = std::filesystem;

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".meta");
  return p;
}

namespace {

std::string join_reals(const Vector& v) {
  std::string out;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (j > 0) out += ',';
    out += text::format_real(v[j]);
  }
  return out;
}

Metadata provenance_entries(const Dataset& ds) {
  Metadata meta;
  meta["n"] = std::to_string(ds.problem.n());
  meta["d"] = std::to_string(ds.problem.d());
  if (ds.provenance) {
    const Provenance& p = *ds.provenance;
    const ErrorModel& err = *p.errors;
    meta["family"] = to_string(err.family());
    if (err.family() == ErrorFamily::symmetric_pareto) meta["alpha"] = text::format_real(err.shape());
    if (err.family() == ErrorFamily::student_t) meta["nu"] = text::format_real(err.shape());
    meta["delta"] = text::format_real(err.delta());
    meta["v_delta"] = text::format_real(err.v_delta());
    meta["gamma"] = text::format_real(p.chain->gamma);
    meta["m"] = std::to_string(p.chain->m);
    meta["sigma4"] = text::format_real(p.covariates->sigma4());
    meta["seed"] = std::to_string(p.seed);
    meta["replicate"] = std::to_string(p.replicate);
  }
  if (ds.truth) meta["beta_star"] = join_reals(ds.truth->beta_star());
  return meta;
}

}  // namespace

void write_metadata(const Metadata& meta, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  for (const auto& [key, value] : meta) out << key << " = " << value << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

Metadata read_metadata(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  Metadata meta;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw IoError(path.string(), "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    meta[std::string(text::trim(body.substr(0, eq)))] = std::string(text::trim(body.substr(eq + 1)));
  }
  return meta;
}

void write_dataset(const Dataset& ds, const fs::path& csv, const Metadata& extra) {
  std::ofstream out(csv);
  if (!out) throw IoError(csv.string(), "cannot open for writing");
  const Matrix& X = ds.problem.X();
  const Vector& y = ds.problem.y();
  out << "i,z,y";
  for (Eigen::Index j = 0; j < X.cols(); ++j) out << ",x_" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto z = static_cast<std::size_t>(i) < ds.Z.size() ? ds.Z[static_cast<std::size_t>(i)] : 0u;
    out << i << ',' << z << ',' << text::format_real(y[i]);
    for (Eigen::Index j = 0; j < X.cols(); ++j) out << ',' << text::format_real(X(i, j));
    out << '\n';
  }
  if (!out) throw IoError(csv.string(), "write failed");

  Metadata meta = provenance_entries(ds);
  for (const auto& [k, v] : extra) meta[k] = v;
  write_metadata(meta, sidecar_path(csv));
}

LoadedDataset read_dataset(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError(csv.string(), "cannot open for reading");
  std::string line;
  if (!std::getline(in, line)) throw IoError(csv.string(), "empty file");
  const auto header = text::split(text::trim(line), ',');
  if (header.size() < 4 || header[0] != "i" || header[1] != "z" || header[2] != "y") {
    throw IoError(csv.string(), "header must be i,z,y,x_1,...,x_d");
  }
  const std::size_t d = header.size() - 3;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[3 + j] != "x_" + std::to_string(j + 1)) {
      throw IoError(csv.string(), "unexpected column '" + header[3 + j] + "'");
    }
  }

  std::vector<std::uint32_t> Z;
  std::vector<double> ys;
  std::vector<double> xs;
  std::size_t lineno = 1;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      const auto fields = text::split(text::trim(line), ',');
      if (fields.size() != header.size()) {
        throw IoError(csv.string(), "line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(header.size()) + " fields");
      }
      Z.push_back(static_cast<std::uint32_t>(text::parse_uint(fields[1], "z")));
      ys.push_back(text::parse_real(fields[2], "y"));
      for (std::size_t j = 0; j < d; ++j) xs.push_back(text::parse_real(fields[3 + j], "x"));
    }
  } catch (const InvalidInput& e) {
    throw IoError(csv.string(), "line " + std::to_string(lineno) + ": " + e.what());
  }
  if (ys.empty()) throw IoError(csv.string(), "no data rows");

  const auto n = static_cast<Eigen::Index>(ys.size());
  Matrix X(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) {
      X(i, j) = xs[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j)];
    }
  }
  Vector y = Eigen::Map<const Vector>(ys.data(), n);

  Metadata meta;
  const fs::path side = sidecar_path(csv);
  if (fs::exists(side)) meta = read_metadata(side);

  std::optional<TruthSpec> truth;
  Vector eps;
  if (auto it = meta.find("beta_star"); it != meta.end()) {
    const auto beta = text::parse_real_list(it->second, "beta_star");
    if (beta.size() != d) throw IoError(side.string(), "beta_star length does not match d");
    truth.emplace(Eigen::Map<const Vector>(beta.data(), static_cast<Eigen::Index>(d)));
    eps = y - X * truth->beta_star();
  }
  LoadedDataset loaded{Dataset{std::move(Z), Problem(std::move(X), std::move(y)), std::move(eps),
                               std::move(truth), std::nullopt},
                       std::move(meta)};
  return loaded;
}

}  // namespace ahr
