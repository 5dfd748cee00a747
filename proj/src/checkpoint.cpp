#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "json.hpp"
#include "mseqa/errors.hpp"
#include "mseqa/model.hpp"

namespace mseqa {

using nlohmann::json;

static const char kMagic[6] = {'M', 'S', 'E', 'Q', 'A', '1'};

namespace {

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("checkpoint: truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

json encoder_config_to_json(const EncoderConfig& c) {
  return json{{"layers", c.layers},       {"heads", c.heads},
              {"hidden", c.hidden},       {"ffn_dim", c.ffn_dim},
              {"max_positions", c.max_positions}, {"vocab_size", c.vocab_size},
              {"dropout_rate", c.dropout_rate}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig c;
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(kMagic, 6);

  json header{{"version", 1},
              {"encoder", encoder_config_to_json(model.config)},
              {"vocab", model.vocab.id_to_token},
              {"vocab_hash", model.vocab.hash()}};
  const std::string hs = header.dump();
  write_u32(out, static_cast<uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  write_u32(out, static_cast<uint32_t>(model.params.tensors.size()));
  for (const auto& t : model.params.tensors) {
    write_u32(out, static_cast<uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_u32(out, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) write_u32(out, static_cast<uint32_t>(d));
    // x86 floats are already little-endian IEEE-754
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw DataError("checkpoint: write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kMagic, 6) != 0)
    throw DataError("checkpoint: bad magic (not an MSEQA1 file): " + path);

  const uint32_t hlen = read_u32(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  if (!in) throw DataError("checkpoint: truncated header");
  json header = json::parse(hs);

  Model m;
  m.config = encoder_config_from_json(header.at("encoder"));
  m.vocab = Vocab::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  if (header.at("vocab_hash").get<uint64_t>() != m.vocab.hash())
    throw DataError("checkpoint: vocab hash mismatch (incompatible or corrupted): " + path);

  const uint32_t n = read_u32(in);
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t nlen = read_u32(in);
    std::string name(nlen, '\0');
    in.read(name.data(), nlen);
    const uint32_t ndim = read_u32(in);
    std::vector<int> shape(ndim);
    for (uint32_t k = 0; k < ndim; ++k) shape[k] = static_cast<int>(read_u32(in));
    auto& t = m.params.add(name, shape);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!in) throw DataError("checkpoint: truncated tensor data at " + name);
  }
  return m;
}

}  // namespace mseqa
