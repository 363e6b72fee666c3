#include "sirtnet/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "sirtnet/error.hpp"
#include "sirtnet/random.hpp"

namespace fs = std::filesystem;

namespace sirtnet {

// ---------------------------------------------------------------- phantoms

void to_json(nlohmann::json& j, const EllipsePhantomSpec& s) {
  j = nlohmann::json{{"min_ellipses", s.min_ellipses},
                     {"max_ellipses", s.max_ellipses},
                     {"body", s.body},
                     {"body_min_axis", s.body_min_axis},
                     {"body_max_axis", s.body_max_axis},
                     {"body_min_intensity", s.body_min_intensity},
                     {"body_max_intensity", s.body_max_intensity},
                     {"min_axis", s.min_axis},
                     {"max_axis", s.max_axis},
                     {"min_intensity", s.min_intensity},
                     {"max_intensity", s.max_intensity}};
}

EllipsePhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
  EllipsePhantomSpec s;
  const nlohmann::json defaults = s;
  if (!j.is_object()) throw InvalidInput("phantom spec: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw InvalidInput("phantom spec: unknown key '" + key + "'");
  }
  try {
    s.min_ellipses = j.value("min_ellipses", s.min_ellipses);
    s.max_ellipses = j.value("max_ellipses", s.max_ellipses);
    s.body = j.value("body", s.body);
    s.body_min_axis = j.value("body_min_axis", s.body_min_axis);
    s.body_max_axis = j.value("body_max_axis", s.body_max_axis);
    s.body_min_intensity = j.value("body_min_intensity", s.body_min_intensity);
    s.body_max_intensity = j.value("body_max_intensity", s.body_max_intensity);
    s.min_axis = j.value("min_axis", s.min_axis);
    s.max_axis = j.value("max_axis", s.max_axis);
    s.min_intensity = j.value("min_intensity", s.min_intensity);
    s.max_intensity = j.value("max_intensity", s.max_intensity);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("phantom spec: ") + e.what());
  }
  if (s.min_ellipses > s.max_ellipses) throw InvalidInput("phantom spec: min_ellipses > max_ellipses");
  if (!(s.min_axis > 0.0 && s.min_axis <= s.max_axis && s.max_axis < 1.0)) {
    throw InvalidInput("phantom spec: need 0 < min_axis <= max_axis < 1");
  }
  if (!(s.body_min_axis > 0.0 && s.body_min_axis <= s.body_max_axis && s.body_max_axis <= 1.0)) {
    throw InvalidInput("phantom spec: need 0 < body_min_axis <= body_max_axis <= 1");
  }
  return s;
}

Image render_phantom(std::span<const Ellipse> ellipses, std::size_t size) {
  constexpr int kSub = 4;
  Image img(size);
  const double half = 0.5 * static_cast<double>(size - 1);
  const double to_unit = 2.0 / static_cast<double>(size);

  struct Prepared {
    Ellipse e;
    double c, s;
  };
  std::vector<Prepared> prepared;
  for (const auto& e : ellipses) prepared.push_back({e, std::cos(e.angle), std::sin(e.angle)});

  for (std::size_t row = 0; row < size; ++row) {
    for (std::size_t col = 0; col < size; ++col) {
      double acc = 0.0;
      for (int sr = 0; sr < kSub; ++sr) {
        for (int sc = 0; sc < kSub; ++sc) {
          const double ox = (sc + 0.5) / kSub - 0.5;
          const double oy = (sr + 0.5) / kSub - 0.5;
          const double u = (static_cast<double>(col) - half + ox) * to_unit;
          const double v = (half - static_cast<double>(row) - oy) * to_unit;
          double value = 0.0;
          for (const auto& p : prepared) {
            const double dx = u - p.e.center_x;
            const double dy = v - p.e.center_y;
            const double xr = (dx * p.c + dy * p.s) / p.e.semi_axis_x;
            const double yr = (-dx * p.s + dy * p.c) / p.e.semi_axis_y;
            if (xr * xr + yr * yr <= 1.0) value += p.e.intensity;
          }
          acc += std::clamp(value, 0.0, 1.0);
        }
      }
      img(row, col) = static_cast<float>(acc / (kSub * kSub));
    }
  }
  return img;
}

namespace {

Ellipse random_ellipse(Rng& rng, double min_axis, double max_axis, double min_intensity,
                       double max_intensity) {
  Ellipse e;
  e.semi_axis_x = rng.uniform(min_axis, max_axis);
  e.semi_axis_y = rng.uniform(min_axis, max_axis);
  // Any point of the ellipse lies within max(axes) of its center.
  const double reach = std::max(0.0, 1.0 - std::max(e.semi_axis_x, e.semi_axis_y));
  const double radius = reach * std::sqrt(rng.uniform());
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  e.center_x = radius * std::cos(phi);
  e.center_y = radius * std::sin(phi);
  e.angle = rng.uniform(0.0, std::numbers::pi);
  e.intensity = rng.uniform(min_intensity, max_intensity);
  return e;
}

}  // namespace

std::vector<Ellipse> random_ellipses(const EllipsePhantomSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Ellipse> out;
  if (spec.body) {
    out.push_back(random_ellipse(rng, spec.body_min_axis, spec.body_max_axis,
                                 spec.body_min_intensity, spec.body_max_intensity));
  }
  const std::size_t extra =
      spec.min_ellipses + static_cast<std::size_t>(rng.below(spec.max_ellipses - spec.min_ellipses + 1));
  for (std::size_t k = 0; k < extra; ++k) {
    out.push_back(
        random_ellipse(rng, spec.min_axis, spec.max_axis, spec.min_intensity, spec.max_intensity));
  }
  return out;
}

std::vector<Image> generate_phantoms(const EllipsePhantomSpec& spec, std::size_t count,
                                     std::size_t size, std::uint64_t seed) {
  if (count == 0) throw InvalidInput("generate_phantoms: count must be >= 1");
  if (size == 0) throw InvalidInput("generate_phantoms: size must be >= 1");
  std::vector<Image> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto ellipses = random_ellipses(spec, derive_seed(seed, k));
    out.push_back(render_phantom(ellipses, size));
  }
  return out;
}

// ------------------------------------------------------------ acquisition

Sinogram simulate_low_dose(const Image& image, const ProjectionGeometry& geom) {
  return forward_project(image, geom);
}

double attenuation_scale_for(std::span<const Sinogram> sinograms, double max_attenuation) {
  if (!(max_attenuation > 0.0)) throw InvalidInput("attenuation_scale_for: max must be positive");
  double peak = 0.0;
  for (const auto& s : sinograms) {
    for (float v : s.values()) peak = std::max(peak, static_cast<double>(v));
  }
  return peak > 0.0 ? max_attenuation / peak : 1.0;
}

Sinogram apply_poisson_noise(const Sinogram& sino, const NoiseModel& model, std::size_t* clamped) {
  if (!(model.incident_intensity > 0.0) || !std::isfinite(model.incident_intensity)) {
    throw InvalidInput("apply_poisson_noise: I0 must be positive");
  }
  if (!(model.attenuation_scale > 0.0)) {
    throw InvalidInput("apply_poisson_noise: attenuation scale must be positive");
  }
  Rng rng(model.seed);
  std::size_t negatives = 0;
  Sinogram out(sino.n_angles(), sino.n_detectors());
  const auto in = sino.values();
  auto dst = out.values();
  const double i0 = model.incident_intensity;
  const double mu = model.attenuation_scale;
  for (std::size_t i = 0; i < in.size(); ++i) {
    double p = in[i];
    if (p < 0.0) {
      p = 0.0;
      ++negatives;
    }
    std::poisson_distribution<long long> counts(i0 * std::exp(-p * mu));
    const auto c = static_cast<double>(std::max<long long>(counts(rng.engine()), 1));
    dst[i] = static_cast<float>(-std::log(c / i0) / mu);
  }
  if (clamped) *clamped = negatives;
  return out;
}

// ---------------------------------------------------------------- file I/O

namespace {

void write_floats(const fs::path& path, std::span<const float> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float v : values) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      char bytes[4];
      for (int b = 0; b < 4; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
      out.write(bytes, 4);
    }
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<float> read_floats(const fs::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes(count * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw IoError("'" + path.string() + "' is shorter than its sidecar declares");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw IoError("'" + path.string() + "' is longer than its sidecar declares");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
  return values;
}

fs::path sidecar(const fs::path& path) { return fs::path(path.string() + ".json"); }

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_image(const fs::path& path, const Image& image) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_floats(path, image.values());
  const nlohmann::json meta{{"width", image.size()},
                            {"height", image.size()},
                            {"dtype", "float32"},
                            {"endianness", "little"}};
  write_text(sidecar(path), meta.dump(2) + "\n");
}

Image read_image(const fs::path& path) {
  const auto meta = read_json(sidecar(path));
  std::size_t width = 0, height = 0;
  try {
    width = meta.at("width").get<std::size_t>();
    height = meta.at("height").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad image sidecar for '" + path.string() + "': " + e.what());
  }
  if (width != height) throw IoError("'" + path.string() + "' is not square");
  return Image(width, read_floats(path, width * height));
}

void write_sinogram(const fs::path& path, const Sinogram& sino) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_floats(path, sino.values());
  const nlohmann::json meta{{"n_angles", sino.n_angles()},
                            {"n_detectors", sino.n_detectors()},
                            {"dtype", "float32"},
                            {"endianness", "little"}};
  write_text(sidecar(path), meta.dump(2) + "\n");
}

Sinogram read_sinogram(const fs::path& path) {
  const auto meta = read_json(sidecar(path));
  std::size_t n_angles = 0, n_det = 0;
  try {
    n_angles = meta.at("n_angles").get<std::size_t>();
    n_det = meta.at("n_detectors").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad sinogram sidecar for '" + path.string() + "': " + e.what());
  }
  return Sinogram(n_angles, n_det, read_floats(path, n_angles * n_det));
}

void write_pgm16(const fs::path& path, const Image& image, float lo, float hi) {
  if (!(hi > lo)) throw InvalidInput("write_pgm16: requires hi > lo");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << image.size() << ' ' << image.size() << "\n65535\n";
  for (float v : image.values()) {
    const double t = std::clamp((static_cast<double>(v) - lo) / (hi - lo), 0.0, 1.0);
    const auto level = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    const char bytes[2] = {static_cast<char>(level >> 8), static_cast<char>(level & 0xFF)};
    out.write(bytes, 2);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

std::string next_pgm_token(std::istream& in) {
  std::string token;
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> token;
  return token;
}

}  // namespace

Image import_pgm(const fs::path& path, std::size_t size) {
  if (size == 0) throw InvalidInput("import_pgm: size must be >= 1");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::size_t width = 0, height = 0, maxval = 0;
  try {
    if (next_pgm_token(in) != "P5") throw IoError("'" + path.string() + "' is not a binary PGM");
    width = std::stoul(next_pgm_token(in));
    height = std::stoul(next_pgm_token(in));
    maxval = std::stoul(next_pgm_token(in));
  } catch (const std::logic_error&) {
    throw IoError("'" + path.string() + "' has a malformed PGM header");
  }
  in.get();  // single whitespace before the raster
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
    throw IoError("'" + path.string() + "' has unsupported PGM dimensions or depth");
  }
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(width * height * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError("'" + path.string() + "' raster is truncated");
  }
  std::vector<double> src(width * height);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double level =
        bytes_per == 2 ? static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
    src[i] = level / static_cast<double>(maxval);
  }

  // Bilinear resample with pixel-center alignment.
  Image out(size);
  const double sy = static_cast<double>(height) / static_cast<double>(size);
  const double sx = static_cast<double>(width) / static_cast<double>(size);
  for (std::size_t r = 0; r < size; ++r) {
    const double fy = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, height - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t c = 0; c < size; ++c) {
      const double fx = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, width - 1);
      const double tx = fx - static_cast<double>(x0);
      const double top = (1 - tx) * src[y0 * width + x0] + tx * src[y0 * width + x1];
      const double bottom = (1 - tx) * src[y1 * width + x0] + tx * src[y1 * width + x1];
      out(r, c) = static_cast<float>((1 - ty) * top + ty * bottom);
    }
  }
  return out;
}

// ---------------------------------------------------------------- datasets

Normalization fit_normalization(std::span<const Image> images) {
  if (images.empty()) throw InvalidInput("fit_normalization: no images");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& img : images) {
    for (float v : img.values()) {
      lo = std::min(lo, static_cast<double>(v));
      hi = std::max(hi, static_cast<double>(v));
    }
  }
  if (lo >= 0.0 && hi <= 1.0) return {};
  if (!(hi > lo)) return {lo, 1.0};
  return {lo, hi - lo};
}

Image normalize(const Image& image, const Normalization& norm) {
  Image out(image.size());
  std::transform(image.values().begin(), image.values().end(), out.values().begin(),
                 [&](float v) { return static_cast<float>(norm.apply(v)); });
  return out;
}

Image denormalize(const Image& image, const Normalization& norm) {
  Image out(image.size());
  std::transform(image.values().begin(), image.values().end(), out.values().begin(),
                 [&](float v) { return static_cast<float>(norm.invert(v)); });
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t count,
                                                                            double train_ratio,
                                                                            std::uint64_t seed) {
  if (!(train_ratio >= 0.0 && train_ratio <= 1.0)) {
    throw InvalidInput("split: train_ratio must be within [0, 1]");
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(order));
  auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(count)));
  if (count >= 2 && train_ratio > 0.0 && train_ratio < 1.0) {
    n_train = std::clamp<std::size_t>(n_train, 1, count - 1);
  }
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> val(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

namespace {

nlohmann::json entries_to_json(const std::vector<ManifestEntry>& entries) {
  auto arr = nlohmann::json::array();
  for (const auto& e : entries) {
    arr.push_back({{"id", e.id}, {"image", e.image}, {"sinogram", e.sinogram}});
  }
  return arr;
}

std::vector<ManifestEntry> entries_from_json(const nlohmann::json& arr) {
  std::vector<ManifestEntry> out;
  for (const auto& e : arr) {
    out.push_back({e.at("id").get<std::string>(), e.at("image").get<std::string>(),
                   e.at("sinogram").get<std::string>()});
  }
  return out;
}

std::string sample_name(const char* prefix, std::size_t index) {
  std::ostringstream os;
  os << prefix << '_' << std::setw(4) << std::setfill('0') << index;
  return os.str();
}

}  // namespace

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["geometry"] = m.geometry;
  j["normalization"] = {{"offset", m.normalization.offset}, {"scale", m.normalization.scale}};
  j["attenuation_scale"] = m.attenuation_scale;
  j["incident_intensity"] =
      m.incident_intensity ? nlohmann::json(*m.incident_intensity) : nlohmann::json(nullptr);
  j["split_seed"] = m.split_seed;
  j["train_ratio"] = m.train_ratio;
  j["train"] = entries_to_json(m.train);
  j["validation"] = entries_to_json(m.validation);
  j["test"] = entries_to_json(m.test);
  return j;
}

DatasetManifest manifest_from_json(const nlohmann::json& j, const fs::path& root) {
  DatasetManifest m;
  m.root = root;
  try {
    m.geometry = geometry_from_json(j.at("geometry"));
    m.normalization.offset = j.at("normalization").at("offset").get<double>();
    m.normalization.scale = j.at("normalization").at("scale").get<double>();
    m.attenuation_scale = j.at("attenuation_scale").get<double>();
    if (!j.at("incident_intensity").is_null()) {
      m.incident_intensity = j.at("incident_intensity").get<double>();
    }
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.train_ratio = j.at("train_ratio").get<double>();
    m.train = entries_from_json(j.at("train"));
    m.validation = entries_from_json(j.at("validation"));
    m.test = entries_from_json(j.at("test"));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("manifest: ") + e.what());
  }
  return m;
}

DatasetManifest build_dataset(std::span<const Image> images, std::span<const Image> test_images,
                              const ProjectionGeometry& geom,
                              const std::optional<NoiseModel>& noise, std::uint64_t split_seed,
                              double train_ratio, const fs::path& dir) {
  if (images.empty()) throw InvalidInput("build_dataset: no training images");

  std::vector<Image> all(images.begin(), images.end());
  all.insert(all.end(), test_images.begin(), test_images.end());
  for (const auto& img : all) geom.require_image(img);

  DatasetManifest m;
  m.root = dir;
  m.geometry = geom;
  m.normalization = fit_normalization(all);
  m.split_seed = split_seed;
  m.train_ratio = train_ratio;

  std::vector<Image> normalized;
  std::vector<Sinogram> sinograms;
  for (const auto& img : all) {
    normalized.push_back(normalize(img, m.normalization));
    sinograms.push_back(simulate_low_dose(normalized.back(), geom));
  }
  m.attenuation_scale = attenuation_scale_for(sinograms);
  if (noise) {
    m.incident_intensity = noise->incident_intensity;
    for (std::size_t k = 0; k < sinograms.size(); ++k) {
      NoiseModel model = *noise;
      model.attenuation_scale = m.attenuation_scale;
      model.seed = derive_seed(noise->seed, k);
      sinograms[k] = apply_poisson_noise(sinograms[k], model);
    }
  }

  auto store = [&](std::size_t k, const std::string& id) {
    ManifestEntry e{id, "images/" + id + ".f32", "sinograms/" + id + ".f32"};
    write_image(dir / e.image, normalized[k]);
    write_sinogram(dir / e.sinogram, sinograms[k]);
    return e;
  };

  const auto [train_idx, val_idx] = split_indices(images.size(), train_ratio, split_seed);
  for (std::size_t k : train_idx) m.train.push_back(store(k, sample_name("sample", k)));
  for (std::size_t k : val_idx) m.validation.push_back(store(k, sample_name("sample", k)));
  for (std::size_t k = 0; k < test_images.size(); ++k) {
    m.test.push_back(store(images.size() + k, sample_name("test", k)));
  }

  write_text(dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
  return m;
}

DatasetManifest load_manifest(const fs::path& manifest_path) {
  const auto root = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
  DatasetManifest m = manifest_from_json(read_json(manifest_path), root);
  auto check = [&](const ManifestEntry& e) {
    for (const auto& rel : {e.image, e.sinogram}) {
      if (!fs::exists(root / rel)) {
        throw IoError("manifest entry '" + e.id + "' references missing file '" +
                      (root / rel).string() + "'");
      }
    }
    const auto img_meta = read_json(sidecar(root / e.image));
    const auto sino_meta = read_json(sidecar(root / e.sinogram));
    if (img_meta.value("width", std::size_t{0}) != m.geometry.image_size() ||
        sino_meta.value("n_angles", std::size_t{0}) != m.geometry.n_angles() ||
        sino_meta.value("n_detectors", std::size_t{0}) != m.geometry.n_detectors()) {
      throw IoError("manifest entry '" + e.id + "' does not match the declared geometry");
    }
  };
  for (const auto* list : {&m.train, &m.validation, &m.test}) {
    for (const auto& e : *list) check(e);
  }
  return m;
}

std::vector<Sample> load_samples(const DatasetManifest& manifest, Split split) {
  const auto& list = split == Split::train        ? manifest.train
                     : split == Split::validation ? manifest.validation
                                                  : manifest.test;
  std::vector<Sample> out;
  out.reserve(list.size());
  for (const auto& e : list) {
    out.push_back({e.id, read_image(manifest.root / e.image),
                   read_sinogram(manifest.root / e.sinogram)});
  }
  return out;
}

}  // namespace sirtnet
