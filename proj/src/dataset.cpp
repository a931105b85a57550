#include "breakeven/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "breakeven/error.hpp"
#include "breakeven/rng.hpp"

namespace breakeven {

namespace {

const char* kind_name(DatasetSpec::Kind k) {
  switch (k) {
    case DatasetSpec::Kind::gaussian_blobs: return "gaussian_blobs";
    case DatasetSpec::Kind::spirals: return "spirals";
    case DatasetSpec::Kind::xor_: return "xor";
    case DatasetSpec::Kind::csv: return "csv";
  }
  return "?";
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json DatasetSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = kind_name(kind);
  if (kind == Kind::csv) {
    j["path"] = path;
  } else {
    j["n"] = n;
    j["classes"] = classes;
    j["dim"] = dim;
    if (kind == Kind::gaussian_blobs) j["radius"] = radius;
    j["sigma"] = sigma;
    if (kind == Kind::spirals) j["turns"] = turns;
  }
  j["val_fraction"] = val_fraction;
  return j;
}

DatasetSpec DatasetSpec::from_json(const nlohmann::json& j) {
  DatasetSpec s;
  const std::string kind = j.value("kind", std::string("gaussian_blobs"));
  if (kind == "gaussian_blobs") {
    s.kind = Kind::gaussian_blobs;
  } else if (kind == "spirals") {
    s.kind = Kind::spirals;
  } else if (kind == "xor") {
    s.kind = Kind::xor_;
    s.classes = 2;
  } else if (kind == "csv") {
    s.kind = Kind::csv;
  } else {
    throw SchemaError("dataset.kind", "unknown dataset kind '" + kind + "'");
  }
  s.n = j.value("n", s.n);
  s.classes = j.value("classes", s.classes);
  s.dim = j.value("dim", s.dim);
  s.radius = j.value("radius", s.radius);
  s.sigma = j.value("sigma", s.sigma);
  s.turns = j.value("turns", s.turns);
  s.path = j.value("path", s.path);
  s.val_fraction = j.value("val_fraction", s.val_fraction);
  return s;
}

Batch parse_csv_dataset(const std::string& text) {
  Batch b;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool first_data = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> fields;
    bool numeric = true;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = std::min(line.find(',', start), line.size());
      std::string field = line.substr(start, comma - start);
      field.erase(0, field.find_first_not_of(" \t"));
      field.erase(field.find_last_not_of(" \t") + 1);
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size() ||
          !std::isfinite(v)) {
        numeric = false;
      }
      fields.push_back(v);
      start = comma + 1;
    }
    if (!numeric) {
      if (line_no == 1 && first_data) continue;  // header
      throw Error(ErrorKind::CsvParse, "line " + std::to_string(line_no) + ": non-numeric field");
    }
    if (fields.size() < 2)
      throw Error(ErrorKind::CsvParse, "line " + std::to_string(line_no) + ": need label and features");
    const double label = fields[0];
    if (label < 0.0 || label != std::floor(label))
      throw Error(ErrorKind::CsvParse, "line " + std::to_string(line_no) + ": label must be a non-negative integer");
    if (first_data) {
      b.d = fields.size() - 1;
      first_data = false;
    } else if (fields.size() - 1 != b.d) {
      throw Error(ErrorKind::CsvParse, "line " + std::to_string(line_no) + ": inconsistent column count");
    }
    b.labels.push_back(static_cast<int>(label));
    b.inputs.insert(b.inputs.end(), fields.begin() + 1, fields.end());
    ++b.n;
  }
  if (b.n == 0) throw Error(ErrorKind::CsvParse, "no data rows");
  return b;
}

namespace {

Batch generate(const DatasetSpec& spec, Rng& rng) {
  Batch b;
  b.n = spec.n;
  b.d = spec.dim;
  b.inputs.resize(spec.n * spec.dim, 0.0);
  b.labels.resize(spec.n);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < spec.n; ++i) {
    double* x = b.inputs.data() + i * spec.dim;
    switch (spec.kind) {
      case DatasetSpec::Kind::gaussian_blobs: {
        const std::size_t c = i % spec.classes;
        const double angle = two_pi * static_cast<double>(c) / static_cast<double>(spec.classes);
        x[0] = spec.radius * std::cos(angle);
        x[1] = spec.radius * std::sin(angle);
        for (std::size_t k = 0; k < spec.dim; ++k) x[k] += spec.sigma * rng.normal();
        b.labels[i] = static_cast<int>(c);
        break;
      }
      case DatasetSpec::Kind::spirals: {
        const std::size_t c = i % spec.classes;
        const double t = rng.uniform();
        const double angle = two_pi * (spec.turns * t + static_cast<double>(c) /
                                                            static_cast<double>(spec.classes));
        x[0] = t * std::cos(angle) + spec.sigma * rng.normal();
        x[1] = t * std::sin(angle) + spec.sigma * rng.normal();
        b.labels[i] = static_cast<int>(c);
        break;
      }
      case DatasetSpec::Kind::xor_: {
        const double a = rng.uniform(-1.0, 1.0);
        const double c = rng.uniform(-1.0, 1.0);
        x[0] = a + spec.sigma * rng.normal();
        x[1] = c + spec.sigma * rng.normal();
        b.labels[i] = (a > 0.0) != (c > 0.0) ? 1 : 0;
        break;
      }
      case DatasetSpec::Kind::csv: break;
    }
  }
  return b;
}

void validate(const DatasetSpec& spec) {
  if (spec.kind == DatasetSpec::Kind::csv) {
    if (spec.path.empty()) throw Error(ErrorKind::InvalidParams, "csv dataset needs a path");
  } else {
    if (spec.n < 2) throw Error(ErrorKind::InvalidParams, "need n >= 2");
    if (spec.classes < 2) throw Error(ErrorKind::InvalidParams, "need classes >= 2");
    if (spec.dim < 2) throw Error(ErrorKind::InvalidParams, "need dim >= 2");
    if (!(spec.sigma >= 0.0)) throw Error(ErrorKind::InvalidParams, "sigma must be >= 0");
    if (spec.kind == DatasetSpec::Kind::gaussian_blobs && !(spec.radius > 0.0))
      throw Error(ErrorKind::InvalidParams, "blob separation (radius) must be > 0");
    if (spec.kind == DatasetSpec::Kind::xor_ && spec.classes != 2)
      throw Error(ErrorKind::InvalidParams, "xor has exactly 2 classes");
  }
  if (!(spec.val_fraction >= 0.0 && spec.val_fraction < 1.0))
    throw Error(ErrorKind::InvalidParams, "val_fraction must be in [0, 1)");
}

}  // namespace

Dataset make_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  validate(spec);
  Dataset ds;
  ds.provenance = spec.to_json();
  Rng rng(derive_seed(seed, 0xda7a));
  if (spec.kind == DatasetSpec::Kind::csv) {
    std::ifstream f(spec.path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot read " + spec.path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();
    ds.all = parse_csv_dataset(text);
    ds.provenance["hash"] = hex64(fnv1a64(text));
  } else {
    ds.all = generate(spec, rng);
  }

  std::vector<std::size_t> idx = iota_indices(ds.all.n);
  Rng split_rng(derive_seed(seed, 0x5b1));
  split_rng.shuffle(idx);
  const auto n_val = static_cast<std::size_t>(
      std::llround(spec.val_fraction * static_cast<double>(ds.all.n)));
  if (n_val >= ds.all.n) throw Error(ErrorKind::InvalidParams, "validation split leaves no training data");
  ds.val_rows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  ds.train_rows.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(ds.val_rows.begin(), ds.val_rows.end());
  std::sort(ds.train_rows.begin(), ds.train_rows.end());
  ds.train = ds.all.select(ds.train_rows);
  ds.val = ds.all.select(ds.val_rows);
  return ds;
}

}  // namespace breakeven
