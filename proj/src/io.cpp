#include "sau/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sau/common.hpp"

namespace sau {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'U', 'T'};

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) fail("blob: truncated header");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

std::size_t dtype_size(DType d) { return d == DType::kF32 ? 4 : 8; }

void put_scalar(std::ostream& os, double v, DType d) {
  if (d == DType::kF32) {
    float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_le<std::uint32_t>(os, bits);
  } else {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_le<std::uint64_t>(os, bits);
  }
}

double scalar_from_bytes(const unsigned char* p, DType d) {
  if (d == DType::kF32) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void write_tensor_blob(std::ostream& os, const Tensor& t, DType dtype) {
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, kBlobVersion);
  os.put(static_cast<char>(dtype));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_le<std::uint64_t>(os, static_cast<std::uint64_t>(d));
  for (std::size_t i = 0; i < t.size(); ++i) put_scalar(os, t[i], dtype);
  if (!os) fail("blob: write failed");
}

Tensor read_tensor_blob(std::istream& is, DType* dtype_out) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) fail("blob: bad magic");
  std::uint32_t version = get_le<std::uint32_t>(is);
  if (version != kBlobVersion) fail("blob: unsupported version " + std::to_string(version));
  int dt = is.get();
  if (dt != 0 && dt != 1) fail("blob: unknown dtype code " + std::to_string(dt));
  DType dtype = static_cast<DType>(dt);
  if (dtype_out) *dtype_out = dtype;
  std::uint32_t rank = get_le<std::uint32_t>(is);
  if (rank > 8) fail("blob: implausible rank " + std::to_string(rank));
  Shape shape(rank);
  for (std::uint32_t i = 0; i < rank; ++i)
    shape[i] = static_cast<std::size_t>(get_le<std::uint64_t>(is));
  std::size_t n = numel(shape);
  std::size_t esz = dtype_size(dtype);
  std::vector<unsigned char> raw(n * esz);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size())
    fail("blob: payload truncated (expected " + std::to_string(raw.size()) + " bytes)");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = scalar_from_bytes(raw.data() + i * esz, dtype);
  return Tensor::from_data(std::move(shape), std::move(data));
}

void write_tensor_blob_file(const std::filesystem::path& p, const Tensor& t, DType dtype) {
  std::ofstream os(p, std::ios::binary);
  if (!os) fail("blob: cannot open " + p.string() + " for writing");
  write_tensor_blob(os, t, dtype);
}

Tensor read_tensor_blob_file(const std::filesystem::path& p, DType* dtype_out) {
  std::ifstream is(p, std::ios::binary);
  if (!is) fail("blob: cannot open " + p.string());
  return read_tensor_blob(is, dtype_out);
}

std::filesystem::path blob_path_for(const std::filesystem::path& manifest) {
  std::filesystem::path p = manifest;
  p.replace_extension(".blob");
  return p;
}

void save_dataset(const std::filesystem::path& manifest, const std::vector<Sample>& samples) {
  std::ofstream mf(manifest);
  if (!mf) fail("manifest: cannot open " + manifest.string() + " for writing");

  Shape row_shape;
  if (!samples.empty()) row_shape = samples[0].features.shape();
  std::size_t row_elems = samples.empty() ? 0 : numel(row_shape);
  for (const Sample& s : samples)
    if (s.features.shape() != row_shape) fail("manifest: samples have mixed feature shapes");

  Shape blob_shape;
  blob_shape.push_back(samples.size());
  for (std::size_t d : row_shape) blob_shape.push_back(d);
  Tensor all(blob_shape);
  std::size_t off = 0;
  for (const Sample& s : samples) {
    for (std::size_t i = 0; i < row_elems; ++i) all[off + i] = s.features[i];
    off += row_elems;
  }
  write_tensor_blob_file(blob_path_for(manifest), all, DType::kF32);

  const std::size_t row_bytes = row_elems * 4;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    nlohmann::json rec;
    rec["id"] = samples[i].id;
    rec["label"] = samples[i].label;
    rec["is_synthetic"] = samples[i].is_synthetic;
    rec["quality"] = samples[i].quality;
    rec["offset"] = i * row_bytes;
    mf << rec.dump() << '\n';
  }
  if (!mf) fail("manifest: write failed");
}

std::vector<Sample> load_dataset(const std::filesystem::path& manifest) {
  std::ifstream mf(manifest);
  if (!mf) fail("manifest: cannot open " + manifest.string());

  DType dtype = DType::kF32;
  Tensor all = read_tensor_blob_file(blob_path_for(manifest), &dtype);
  if (all.rank() < 1) fail("blob: dataset blob must have rank >= 1");
  const std::size_t n_rows = all.rank() == 0 ? 0 : all.dim(0);
  Shape row_shape(all.shape().begin() + 1, all.shape().end());
  const std::size_t row_elems = numel(row_shape);
  const std::size_t row_bytes = row_elems * dtype_size(dtype);

  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(mf, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      fail("manifest: malformed record at line " + std::to_string(line_no) + ": " + e.what());
    }
    Sample s;
    try {
      s.id = rec.at("id").get<std::uint64_t>();
      s.label = rec.at("label").get<int>();
      s.is_synthetic = rec.at("is_synthetic").get<bool>();
      s.quality = rec.at("quality").get<double>();
      std::uint64_t offset = rec.at("offset").get<std::uint64_t>();
      if (row_bytes == 0 || offset % row_bytes != 0)
        fail("manifest: offset " + std::to_string(offset) + " not aligned to a feature row");
      std::size_t idx = offset / row_bytes;
      if (idx >= n_rows)
        fail("manifest: offset at line " + std::to_string(line_no) +
             " points past the blob payload (blob/manifest dimension mismatch)");
      std::vector<double> feat(row_elems);
      for (std::size_t i = 0; i < row_elems; ++i) feat[i] = all[idx * row_elems + i];
      s.features = Tensor::from_data(row_shape, std::move(feat));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail("manifest: malformed record at line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  if (out.size() != n_rows)
    fail("manifest: " + std::to_string(out.size()) + " records but blob holds " +
         std::to_string(n_rows) + " rows (blob/manifest dimension mismatch)");
  return out;
}

}  // namespace sau
