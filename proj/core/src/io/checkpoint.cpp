// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/io/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "snoopi/error.hpp"

namespace snoopi::io {

namespace {

constexpr std::string_view kMagic = "SNPK";
constexpr unsigned char kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffU));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated SNPK archive");
    const std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() {
    const std::string_view b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  double f64() {
    const std::string_view b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return std::bit_cast<double>(v);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

NamedArray meta_entry(std::string name, std::vector<double> values) {
  const std::size_t n = values.size();
  return NamedArray{std::move(name), {n}, std::move(values)};
}

std::vector<double> split16(std::uint64_t v) {
  return {static_cast<double>(v & 0xffffU), static_cast<double>((v >> 16) & 0xffffU),
          static_cast<double>((v >> 32) & 0xffffU), static_cast<double>((v >> 48) & 0xffffU)};
}

std::uint64_t join16(const std::vector<double>& parts) {
  if (parts.size() != 4) throw FormatError("malformed 64-bit metadata field");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double p = parts[i];
    if (!(p >= 0.0 && p <= 65535.0) || p != std::floor(p)) throw FormatError("malformed 64-bit metadata field");
    v |= static_cast<std::uint64_t>(p) << (16 * i);
  }
  return v;
}

int role_code(model::Role r) { return static_cast<int>(r); }

}  // namespace

std::string encode_snpk(std::span<const NamedArray> entries) {
  std::string out(kMagic);
  out.push_back(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const NamedArray& e : entries) {
    std::size_t count = 1;
    for (std::size_t d : e.shape) count *= d;
    SNOOPI_REQUIRE(count == e.values.size(), "SNPK entry '" + e.name + "' has inconsistent shape");
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put_u32(out, static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t d : e.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : e.values) put_f64(out, v);
  }
  return out;
}

std::vector<NamedArray> decode_snpk(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4) != kMagic) throw FormatError("not an SNPK archive (bad magic)");
  const auto version = static_cast<unsigned char>(in.take(1)[0]);
  if (version != kVersion) throw FormatError("unsupported SNPK version " + std::to_string(version));
  const std::uint32_t count = in.u32();
  std::vector<NamedArray> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray e;
    e.name = std::string(in.take(in.u32()));
    const std::uint32_t rank = in.u32();
    if (rank > 8) throw FormatError("SNPK entry '" + e.name + "' has implausible rank");
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      e.shape.push_back(in.u32());
      n *= e.shape.back();
    }
    if (n > bytes.size() / 8) throw FormatError("SNPK entry '" + e.name + "' exceeds archive size");
    e.values.resize(n);
    for (double& v : e.values) v = in.f64();
    out.push_back(std::move(e));
  }
  if (!in.done()) throw FormatError("trailing bytes after SNPK archive");
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string encode_checkpoint(const model::DenoiserModel& model, const CheckpointMeta& meta) {
  const model::DenoiserConfig& c = model.config();
  std::vector<NamedArray> entries;
  entries.push_back(meta_entry("meta/role", {static_cast<double>(role_code(meta.role))}));
  entries.push_back(meta_entry("meta/config_hash", split16(meta.config_hash)));
  entries.push_back(meta_entry("meta/seed", split16(meta.seed)));
  entries.push_back(meta_entry(
      "meta/model", {static_cast<double>(c.data_dim), static_cast<double>(c.vocab),
                     static_cast<double>(c.max_prompt_length), static_cast<double>(c.embed_dim),
                     static_cast<double>(c.width), static_cast<double>(c.key_dim), static_cast<double>(c.blocks),
                     static_cast<double>(c.time_dim)}));
  entries.push_back(meta_entry("meta/schedule", {static_cast<double>(static_cast<int>(meta.schedule)),
                                                 static_cast<double>(meta.T)}));
  if (model.lora())
    entries.push_back(
        meta_entry("meta/lora", {static_cast<double>(model.lora()->rank), model.lora()->gamma}));
  for (const ad::Parameter& p : model.parameters())
    entries.push_back(NamedArray{p.name(), p.value().shape(), p.value().values()});
  return encode_snpk(entries);
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  std::vector<NamedArray> entries = decode_snpk(bytes);
  std::map<std::string, std::vector<double>> meta;
  std::vector<ad::Parameter> params;
  for (NamedArray& e : entries) {
    if (e.name.rfind("meta/", 0) == 0) {
      meta[e.name] = std::move(e.values);
    } else {
      params.emplace_back(e.name, ad::Array(e.shape, std::move(e.values)));
    }
  }
  for (const char* key : {"meta/role", "meta/config_hash", "meta/seed", "meta/model", "meta/schedule"})
    if (!meta.contains(key)) throw FormatError(std::string("checkpoint lacks ") + key);
  const auto& m = meta["meta/model"];
  const auto& s = meta["meta/schedule"];
  if (m.size() != 8 || s.size() != 2 || meta["meta/role"].size() != 1) throw FormatError("malformed checkpoint metadata");
  CheckpointMeta cm;
  const int role = static_cast<int>(meta["meta/role"][0]);
  if (role < 0 || role > 2) throw FormatError("unknown role code in checkpoint");
  cm.role = static_cast<model::Role>(role);
  cm.config_hash = join16(meta["meta/config_hash"]);
  cm.seed = join16(meta["meta/seed"]);
  const int kind = static_cast<int>(s[0]);
  if (kind < 0 || kind > 1) throw FormatError("unknown schedule code in checkpoint");
  cm.schedule = static_cast<diffusion::ScheduleKind>(kind);
  cm.T = static_cast<int>(s[1]);
  model::DenoiserConfig c;
  c.data_dim = static_cast<std::size_t>(m[0]);
  c.vocab = static_cast<int>(m[1]);
  c.max_prompt_length = static_cast<int>(m[2]);
  c.embed_dim = static_cast<std::size_t>(m[3]);
  c.width = static_cast<std::size_t>(m[4]);
  c.key_dim = static_cast<std::size_t>(m[5]);
  c.blocks = static_cast<std::size_t>(m[6]);
  c.time_dim = static_cast<std::size_t>(m[7]);
  std::optional<model::LoraConfig> lora;
  if (meta.contains("meta/lora")) {
    const auto& l = meta["meta/lora"];
    if (l.size() != 2) throw FormatError("malformed LoRA metadata");
    lora = model::LoraConfig{static_cast<std::size_t>(l[0]), l[1], 0};
  }
  try {
    return Checkpoint{cm, model::DenoiserModel::from_parameters(c, cm.role, lora, std::move(params))};
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint does not match its model metadata: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const model::DenoiserModel& model, const CheckpointMeta& meta) {
  write_file(path, encode_checkpoint(model, meta));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace snoopi::io
