#include "mdlp/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "mdlp/parallel.hpp"

namespace mdlp {

namespace {

double max_abs(const std::array<double, 7>& z) {
  double m = 0;
  for (double x : z) m = std::max(m, std::abs(x));
  return m;
}

std::array<double, 7> pack(const ModeCoefficients& c) {
  return {c.c[0].real(), c.c[1].real(), c.c[1].imag(), c.c[2].real(),
          c.c[2].imag(), c.c[3].real(), c.c[3].imag()};
}

}  // namespace

void LabelVector::validate() const {
  require(z[0] >= 0.0, Errc::invariant_violation, "label gauge requires z1 >= 0");
  double m = 0;
  for (double x : z) {
    require(std::isfinite(x), Errc::invariant_violation, "label entry not finite");
    require(std::abs(x) <= 1.0, Errc::invariant_violation, "label entry outside [-1,1]");
    m = std::max(m, std::abs(x));
  }
  require(m == 1.0, Errc::invariant_violation, "label max |z_n| != 1");
}

LabelVector encode_labels(const ModeCoefficients& coeffs) {
  require(coeffs.c[0].imag() == 0.0 && coeffs.c[0].real() >= 0.0, Errc::invalid_argument,
          "coefficient gauge violated");
  LabelVector label;
  label.z = pack(coeffs);
  const double m = max_abs(label.z);
  require(m > 0.0, Errc::all_zero_coefficients, "cannot encode all-zero coefficients");
  for (double& x : label.z) x /= m;
  return label;
}

ModeCoefficients decode_labels(const LabelVector& label) {
  ModeCoefficients c;
  c.c[0] = {label.z[0], 0.0};
  c.c[1] = {label.z[1], label.z[2]};
  c.c[2] = {label.z[3], label.z[4]};
  c.c[3] = {label.z[5], label.z[6]};
  return c;
}

ModeCoefficients sample_coefficients(Rng& rng) {
  for (;;) {
    ModeCoefficients c;
    c.c[0] = {rng.uniform01_open_low(), 0.0};
    c.c[1] = {rng.uniform_pm1(), rng.uniform_pm1()};
    c.c[2] = {rng.uniform_pm1(), rng.uniform_pm1()};
    c.c[3] = {rng.uniform_pm1(), rng.uniform_pm1()};
    if (max_abs(pack(c)) >= 1e-6) return c;
  }
}

void render_label_stack(const Renderer& renderer, const float z[7], const ChannelSet& set,
                        float* out) {
  LabelVector label;
  for (int k = 0; k < 7; ++k) label.z[k] = z[k];
  const StackD stack = render_half_normalized(renderer, decode_labels(label), set);
  for (std::size_t p = 0; p < stack.size(); ++p) out[p] = static_cast<float>(stack.v[p]);
}

Dataset generate_dataset(const Renderer& renderer, long long n, std::uint64_t seed,
                         const ChannelSet& set) {
  require(n > 0, Errc::invalid_argument, "sample count must be > 0");
  set.validate();

  Dataset ds;
  ds.header.n = n;
  ds.header.height = renderer.grid().n;
  ds.header.width = (renderer.grid().n + 1) / 2;
  ds.header.channels = set;
  ds.header.fiber = renderer.fiber();
  ds.header.grid_pixels = renderer.grid().n;
  ds.header.pitch_over_a = renderer.grid().pitch_um / renderer.fiber().core_radius_um;
  ds.header.seed = seed;
  ds.images.resize(ds.stack_len() * n);
  ds.labels.resize(7 * n);

  parallel_for(0, n, [&](long long i) {
    Rng rng = derive_rng(seed, static_cast<std::uint64_t>(i));
    const LabelVector z = encode_labels(sample_coefficients(rng));
    float* lab = ds.labels.data() + 7 * i;
    // Labels are stored (and trained on) as float32; the stack is rendered
    // from the quantized label so that re-rendering a stored label
    // reproduces the stored stack bit for bit.
    for (int k = 0; k < 7; ++k) lab[k] = static_cast<float>(z.z[k]);
    render_label_stack(renderer, lab, set, ds.images.data() + ds.stack_len() * i);
  });
  return ds;
}

namespace {

nlohmann::json header_to_json(const DatasetHeader& h) {
  nlohmann::json channels = nlohmann::json::array();
  for (Channel c : h.channels.channels) channels.push_back(channel_name(c));
  return {
      {"magic", h.magic},
      {"version", h.version},
      {"n", h.n},
      {"height", h.height},
      {"width", h.width},
      {"channels", channels},
      {"label_len", h.label_len},
      {"handedness", h.handedness},
      {"fiber",
       {{"a_um", h.fiber.core_radius_um},
        {"na", h.fiber.numerical_aperture},
        {"lambda_um", h.fiber.wavelength_um}}},
      {"grid", {{"pixels", h.grid_pixels}, {"pitch_over_a", h.pitch_over_a}}},
      {"seed", h.seed},
  };
}

DatasetHeader header_from_json(const nlohmann::json& j) {
  DatasetHeader h;
  h.magic = j.at("magic").get<std::string>();
  require(h.magic == "MDLP11", Errc::bad_magic, "wrong magic: " + h.magic);
  h.version = j.at("version").get<int>();
  require(h.version == 1, Errc::version_mismatch,
          "unsupported version " + std::to_string(h.version));
  h.n = j.at("n").get<long long>();
  h.height = j.at("height").get<int>();
  h.width = j.at("width").get<int>();
  for (const auto& name : j.at("channels")) {
    h.channels.channels.push_back(channel_from_name(name.get<std::string>()));
  }
  h.label_len = j.at("label_len").get<int>();
  h.handedness = j.at("handedness").get<std::string>();
  h.fiber.core_radius_um = j.at("fiber").at("a_um").get<double>();
  h.fiber.numerical_aperture = j.at("fiber").at("na").get<double>();
  h.fiber.wavelength_um = j.at("fiber").at("lambda_um").get<double>();
  h.grid_pixels = j.at("grid").at("pixels").get<int>();
  h.pitch_over_a = j.at("grid").at("pitch_over_a").get<double>();
  h.seed = j.at("seed").get<std::uint64_t>();
  return h;
}

void validate_header(const DatasetHeader& h) {
  require(h.n > 0, Errc::invariant_violation, "header: n must be > 0");
  require(h.height > 0 && h.width > 0, Errc::invariant_violation, "header: bad image shape");
  require(h.label_len == 7, Errc::invariant_violation, "header: label_len must be 7");
  h.channels.validate();
  h.fiber.validate();
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
  static_assert(sizeof(float) == 4);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io_error, "cannot open " + path);
  out << header_to_json(dataset.header).dump() << "\n";
  // Raw float32 blobs; this codebase targets little-endian hosts.
  out.write(reinterpret_cast<const char*>(dataset.images.data()),
            static_cast<std::streamsize>(dataset.images.size() * sizeof(float)));
  out.write(reinterpret_cast<const char*>(dataset.labels.data()),
            static_cast<std::streamsize>(dataset.labels.size() * sizeof(float)));
  out.flush();
  require(out.good(), Errc::io_error, "write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io_error, "cannot open " + path);

  std::string line;
  std::getline(in, line);
  require(in.good() && !line.empty(), Errc::bad_magic, "missing header line");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    fail(Errc::bad_magic, "header is not valid JSON");
  }

  Dataset ds;
  try {
    ds.header = header_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invariant_violation, std::string("header: ") + e.what());
  }
  validate_header(ds.header);

  const std::size_t image_floats = ds.stack_len() * ds.header.n;
  const std::size_t label_floats = 7u * ds.header.n;
  ds.images.resize(image_floats);
  ds.labels.resize(label_floats);
  in.read(reinterpret_cast<char*>(ds.images.data()),
          static_cast<std::streamsize>(image_floats * sizeof(float)));
  require(static_cast<std::size_t>(in.gcount()) == image_floats * sizeof(float),
          Errc::truncated_file, "image block truncated");
  in.read(reinterpret_cast<char*>(ds.labels.data()),
          static_cast<std::streamsize>(label_floats * sizeof(float)));
  require(static_cast<std::size_t>(in.gcount()) == label_floats * sizeof(float),
          Errc::truncated_file, "label block truncated");
  in.peek();
  require(in.eof(), Errc::invariant_violation, "trailing bytes after label block");

  for (long long i = 0; i < ds.header.n; ++i) {
    LabelVector label;
    for (int k = 0; k < 7; ++k) label.z[k] = ds.label(i)[k];
    try {
      label.validate();
    } catch (const Error&) {
      fail(Errc::invariant_violation, "label invariants violated at sample " + std::to_string(i));
    }
  }
  return ds;
}

}  // namespace mdlp
