#include "nsp/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "nsp/errors.hpp"

namespace nsp {

namespace {

constexpr std::array<char, 8> kMagic{'N', 'S', 'P', 'C', 'K', 'P', 'T', '\n'};

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw CompatibilityError("checkpoint truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(bytes[i]) << (8 * i);
  }
  return value;
}

nlohmann::json describe(const ParameterSet& params) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& p : params.items()) {
    list.push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}});
  }
  return list;
}

ParameterSet read_params(std::istream& in, const nlohmann::json& list) {
  ParameterSet params;
  for (const auto& entry : list) {
    const auto rows = entry.at("shape").at(0).get<std::size_t>();
    const auto cols = entry.at("shape").at(1).get<std::size_t>();
    std::vector<double> values(rows * cols);
    for (double& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
    params.add(entry.at("name").get<std::string>(), Tensor(rows, cols, std::move(values)));
  }
  return params;
}

}  // namespace

void save_checkpoint(std::ostream& out, const PolicyNetwork& actor,
                     const PolicyNetwork& critic, const nlohmann::json& metadata) {
  if (!(actor.shape() == critic.shape())) {
    throw ContractViolation("actor and critic shapes differ");
  }
  const nlohmann::json manifest = {
      {"format", "nsp-checkpoint"},
      {"version", kCheckpointVersion},
      {"shape", actor.shape().to_json()},
      {"K", actor.shape().gcn_layers},
      {"F", actor.shape().gcn_width},
      {"activations",
       {{"actor", to_string(actor.activation())},
        {"critic", to_string(critic.activation())}}},
      {"actor", describe(actor.params())},
      {"critic", describe(critic.params())},
      {"metadata", metadata}};
  const std::string text = manifest.dump();
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* params : {&actor.params(), &critic.params()}) {
    for (const auto& p : params->items()) {
      for (double v : p.value.values()) put_le(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

void save_checkpoint(const std::string& path, const PolicyNetwork& actor,
                     const PolicyNetwork& critic, const nlohmann::json& metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_checkpoint(out, actor, critic, metadata);
}

CheckpointData load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw CompatibilityError("not a checkpoint file");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CompatibilityError("unsupported checkpoint version " +
                             std::to_string(version));
  }
  const auto length = get_le<std::uint64_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw CompatibilityError("checkpoint truncated");

  CheckpointData data;
  try {
    data.manifest = nlohmann::json::parse(text);
    data.shape = NetworkShape::from_json(data.manifest.at("shape"));
    data.actor = read_params(in, data.manifest.at("actor"));
    data.critic = read_params(in, data.manifest.at("critic"));
  } catch (const nlohmann::json::exception& e) {
    throw CompatibilityError(std::string("bad checkpoint manifest: ") + e.what());
  }
  return data;
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

void restore_parameters(ParameterSet& target, const ParameterSet& source) {
  if (target.items().size() != source.items().size()) {
    throw CompatibilityError("checkpoint parameter count does not match network");
  }
  for (std::size_t i = 0; i < target.items().size(); ++i) {
    auto& t = target.items()[i];
    const auto& s = source.items()[i];
    if (t.name != s.name || !t.value.same_shape(s.value)) {
      throw CompatibilityError("checkpoint parameter " + s.name +
                               " does not match network layout");
    }
    t.value = s.value;
  }
}

}  // namespace nsp
