// SPDX-License-Identifier: Apache-2.0
#include "sten/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "sten/config.hpp"
#include "sten/errors.hpp"

namespace sten {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'E', 'N', 'C', 'K', 'P', 'T'};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, data, static_cast<uInt>(n));
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t n) : p_(data), end_(data + n) {}

  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) {
      throw DataError("checkpoint is truncated");
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(p_[i]) << (8 * i);
    }
    p_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(p_[i]) << (8 * i);
    }
    p_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(p_), n);
    p_ += n;
    return s;
  }
  [[nodiscard]] bool done() const { return p_ == end_; }

 private:
  const std::uint8_t* p_;
  const std::uint8_t* end_;
};

void write_block(Writer& w, const std::string& name, const Matrix& m) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (float v : m.data()) {
    w.f32(v);
  }
}

void read_block(Reader& r, const std::string& expected_name, Matrix& m) {
  const std::string name = r.str();
  if (name != expected_name) {
    throw DataError("checkpoint block '" + name + "' found where '" + expected_name + "' was expected");
  }
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  if (rows != m.rows() || cols != m.cols()) {
    throw DataError("checkpoint block '" + name + "' has shape " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", config implies " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()));
  }
  for (float& v : m.data()) {
    v = r.f32();
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const TrainedModel& model) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.str("input_dim=" + std::to_string(model.input_dim) + "\n" + train_config_to_text(model.config));

  w.u32(static_cast<std::uint32_t>(model.norm.mean.size()));
  for (double v : model.norm.mean) {
    w.f64(v);
  }
  for (double v : model.norm.stddev) {
    w.f64(v);
  }

  std::uint32_t blocks = 0;
  PhiParams::visit([&](const std::string&, const Matrix&) { ++blocks; }, model.phi);
  GruParams::visit([&](const std::string&, const Matrix&) { ++blocks; }, model.eta.gru);
  w.u32(blocks);
  PhiParams::visit([&](const std::string& n, const Matrix& m) { write_block(w, "phi." + n, m); }, model.phi);
  GruParams::visit([&](const std::string& n, const Matrix& m) { write_block(w, "eta.gru." + n, m); },
                   model.eta.gru);

  w.u32(static_cast<std::uint32_t>(model.trace.size()));
  for (const LossBreakdown& l : model.trace) {
    w.f64(l.otn);
    w.f64(l.dsn);
    w.f64(l.ep);
    w.f64(l.total);
  }
  auto& buf = w.buffer();
  const std::uint32_t crc = crc_of(buf.data(), buf.size());
  w.u32(crc);
  return std::move(buf);
}

TrainedModel deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  Reader tail(bytes.data() + bytes.size() - 4, 4);
  if (tail.u32() != crc_of(bytes.data(), bytes.size() - 4)) {
    throw DataError("checkpoint checksum mismatch (file corrupt or truncated)");
  }
  Reader r(bytes.data() + sizeof(kMagic), bytes.size() - sizeof(kMagic) - 4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }

  TrainedModel model;
  std::string text = r.str();
  const std::string dim_key = "input_dim=";
  const auto nl = text.find('\n');
  if (text.rfind(dim_key, 0) != 0 || nl == std::string::npos) {
    throw DataError("checkpoint config echo lacks input_dim");
  }
  try {
    model.input_dim = std::stoul(text.substr(dim_key.size(), nl - dim_key.size()));
    model.config = train_config_from_text(std::string_view(text).substr(nl + 1));
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config echo is invalid: ") + e.what());
  } catch (const std::logic_error&) {
    throw DataError("checkpoint config echo has a malformed input_dim");
  }

  const std::uint32_t d = r.u32();
  if (d != model.input_dim) {
    throw DataError("checkpoint normalisation has " + std::to_string(d) + " dims, expected " +
                    std::to_string(model.input_dim));
  }
  model.norm.mean.resize(d);
  model.norm.stddev.resize(d);
  for (double& v : model.norm.mean) {
    v = r.f64();
  }
  for (double& v : model.norm.stddev) {
    v = r.f64();
  }

  // Shapes follow from the config; values are overwritten below.
  const NetworkShape shape = model.shape();
  model.phi = init_phi(shape, 0);
  model.eta = init_eta(shape, 0);
  std::uint32_t expected = 0;
  PhiParams::visit([&](const std::string&, const Matrix&) { ++expected; }, model.phi);
  GruParams::visit([&](const std::string&, const Matrix&) { ++expected; }, model.eta.gru);
  if (r.u32() != expected) {
    throw DataError("checkpoint block count does not match its config");
  }
  PhiParams::visit([&](const std::string& n, Matrix& m) { read_block(r, "phi." + n, m); }, model.phi);
  GruParams::visit([&](const std::string& n, Matrix& m) { read_block(r, "eta.gru." + n, m); }, model.eta.gru);

  const std::uint32_t epochs = r.u32();
  for (std::uint32_t e = 0; e < epochs; ++e) {
    LossBreakdown l;
    l.otn = r.f64();
    l.dsn = r.f64();
    l.ep = r.f64();
    l.total = r.f64();
    l.alpha = model.config.alpha;
    model.trace.push_back(l);
  }
  if (!r.done()) {
    throw DataError("checkpoint has trailing bytes");
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw DataError("failed writing " + path.string());
  }
}

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot read " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TrainedModel load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_all(path)); }

std::string file_hash(const std::filesystem::path& path) {
  // Not CRC-32: a CRC over a file that ends in its own CRC is a constant.
  const auto bytes = read_all(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (std::uint8_t b : bytes) {
    h = (h ^ b) * 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sten
