#include "tensorreg/io.hpp"

#include <unistd.h>

#include <bit>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tensorreg {

namespace {

namespace fs = std::filesystem;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
public:
  ByteReader(std::string bytes, fs::path path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::size_t offset() const { return off_; }

  void expect(const char* tag) {
    const std::size_t n = std::strlen(tag);
    need(n, tag);
    if (std::memcmp(bytes_.data() + off_, tag, n) != 0)
      fail(std::string("expected section '") + tag + "'");
    off_ += n;
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[off_++]);
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[off_ + i])) << (8 * i);
    off_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[off_ + i])) << (8 * i);
    off_ += 8;
    return std::bit_cast<double>(v);
  }

  void finish() {
    if (off_ != bytes_.size())
      fail("trailing bytes (" + std::to_string(bytes_.size() - off_) + " unread)");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error(path_.string() + ": " + msg + " at byte offset " +
                             std::to_string(off_));
  }

private:
  void need(std::size_t n, const char* what) const {
    if (off_ + n > bytes_.size())
      throw std::runtime_error(path_.string() + ": truncated file, needed " + std::to_string(n) +
                               " bytes for " + what + " at byte offset " + std::to_string(off_));
  }

  std::string bytes_;
  fs::path path_;
  std::size_t off_ = 0;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void tensor_to_bytes(std::string& buf, const DenseTensor& t) {
  buf += "TNSR";
  buf.push_back('\x01');
  put_u32(buf, static_cast<std::uint32_t>(t.order()));
  for (Index d = 0; d < t.order(); ++d) put_u32(buf, static_cast<std::uint32_t>(t.dim(d)));
  for (Index i = 0; i < t.size(); ++i) put_f64(buf, t[i]);
}

DenseTensor tensor_from_reader(ByteReader& r) {
  r.expect("TNSR");
  const std::uint8_t ver = r.u8("version");
  if (ver != 1) r.fail("unsupported TNSR version " + std::to_string(ver));
  const std::uint32_t d = r.u32("mode count");
  if (d == 0 || d > 64) r.fail("implausible mode count " + std::to_string(d));
  std::vector<Index> dims(d);
  for (std::uint32_t k = 0; k < d; ++k) dims[k] = static_cast<Index>(r.u32("dimension"));
  const Index n = checked_cell_count(dims);
  Vector data(n);
  for (Index i = 0; i < n; ++i) data[i] = r.f64("tensor cell");
  return DenseTensor(std::move(dims), std::move(data));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string version_string() { return "tensorreg 1.0.0"; }

void atomic_write_bytes(const fs::path& path, const std::string& bytes) {
  fs::path dir = path.parent_path();
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  fs::path tmp = dir / (path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_tensor(const fs::path& path, const DenseTensor& t) {
  std::string buf;
  buf.reserve(static_cast<std::size_t>(9 + 4 * t.order() + 8 * t.size()));
  tensor_to_bytes(buf, t);
  atomic_write_bytes(path, buf);
}

DenseTensor read_tensor(const fs::path& path) {
  ByteReader r(slurp(path), path);
  DenseTensor t = tensor_from_reader(r);
  r.finish();
  return t;
}

void write_coeff(const fs::path& path, const TuckerCoeff& c) {
  c.validate();
  std::string buf;
  buf += "GAMA";
  put_u32(buf, static_cast<std::uint32_t>(c.gamma.size()));
  for (Index i = 0; i < c.gamma.size(); ++i) put_f64(buf, c.gamma[i]);
  put_u32(buf, static_cast<std::uint32_t>(c.order()));
  for (const Matrix& b : c.factors) {
    buf += "FACT";
    tensor_to_bytes(buf, DenseTensor({b.rows(), b.cols()},
                                     Eigen::Map<const Vector>(b.data(), b.size())));
  }
  buf += "CORE";
  tensor_to_bytes(buf, c.core);
  atomic_write_bytes(path, buf);
}

TuckerCoeff read_coeff(const fs::path& path) {
  ByteReader r(slurp(path), path);
  TuckerCoeff c;
  r.expect("GAMA");
  const std::uint32_t glen = r.u32("gamma length");
  c.gamma.resize(glen);
  for (std::uint32_t i = 0; i < glen; ++i) c.gamma[i] = r.f64("gamma entry");
  const std::uint32_t d = r.u32("order");
  for (std::uint32_t k = 0; k < d; ++k) {
    r.expect("FACT");
    DenseTensor t = tensor_from_reader(r);
    if (t.order() != 2) r.fail("factor section is not a matrix");
    c.factors.push_back(
        Eigen::Map<const Matrix>(t.data().data(), t.dim(0), t.dim(1)));
  }
  r.expect("CORE");
  c.core = tensor_from_reader(r);
  r.finish();
  c.validate();
  return c;
}

std::vector<std::vector<double>> read_csv(const fs::path& path,
                                          std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": empty file, expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (header) {
    header->clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header->push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t col_no = 0, pos = 0;
    while (pos <= line.size()) {
      ++col_no;
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      const std::string cell = line.substr(pos, comma - pos);
      double v = 0.0;
      const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size())
        throw std::runtime_error(path.string() + ": non-numeric cell '" + cell + "' at row " +
                                 std::to_string(row_no) + ", column " + std::to_string(col_no));
      row.push_back(v);
      pos = comma + 1;
      if (comma == line.size()) break;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path.string() + ": row " + std::to_string(row_no) + " has " +
                               std::to_string(row.size()) + " cells, expected " +
                               std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string buf;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buf += ',';
    buf += header[i];
  }
  buf += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) buf += ',';
      buf += format_double(row[i]);
    }
    buf += '\n';
  }
  atomic_write_bytes(path, buf);
}

void write_dataset(const fs::path& dir, const Dataset& ds) {
  ds.validate();
  fs::create_directories(dir);
  std::vector<std::vector<double>> yrows;
  for (Index i = 0; i < ds.n(); ++i) yrows.push_back({ds.y[i]});
  write_csv(dir / "y.csv", {"y"}, yrows);
  if (ds.has_z()) {
    std::vector<std::string> zh;
    for (Index j = 0; j < ds.z.cols(); ++j) zh.push_back("z" + std::to_string(j + 1));
    std::vector<std::vector<double>> zrows;
    for (Index i = 0; i < ds.n(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(ds.z.cols()));
      for (Index j = 0; j < ds.z.cols(); ++j) row[static_cast<std::size_t>(j)] = ds.z(i, j);
      zrows.push_back(std::move(row));
    }
    write_csv(dir / "z.csv", zh, zrows);
  }
  std::string list;
  char name[32];
  for (Index i = 0; i < ds.n(); ++i) {
    std::snprintf(name, sizeof(name), "x_%06lld.tnsr", static_cast<long long>(i));
    write_tensor(dir / name, ds.x[static_cast<std::size_t>(i)]);
    list += name;
    list += '\n';
  }
  atomic_write_bytes(dir / "x_list.txt", list);
}

Dataset read_dataset(const fs::path& y_csv, const fs::path& x_list, const fs::path& z_csv) {
  Dataset ds;
  const auto yrows = read_csv(y_csv);
  ds.y.resize(static_cast<Index>(yrows.size()));
  for (std::size_t i = 0; i < yrows.size(); ++i) {
    if (yrows[i].size() != 1)
      throw std::runtime_error(y_csv.string() + ": expected a single response column");
    ds.y[static_cast<Index>(i)] = yrows[i][0];
  }

  std::ifstream in(x_list);
  if (!in) throw std::runtime_error("cannot open " + x_list.string());
  const fs::path base = x_list.parent_path();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fs::path p(line);
    if (p.is_relative()) p = base / p;
    ds.x.push_back(read_tensor(p));
  }

  if (!z_csv.empty()) {
    const auto zrows = read_csv(z_csv);
    if (!zrows.empty()) {
      ds.z.resize(static_cast<Index>(zrows.size()), static_cast<Index>(zrows[0].size()));
      for (std::size_t i = 0; i < zrows.size(); ++i)
        for (std::size_t j = 0; j < zrows[i].size(); ++j)
          ds.z(static_cast<Index>(i), static_cast<Index>(j)) = zrows[i][j];
    }
  }
  ds.validate();
  return ds;
}

void write_fit_report(const fs::path& path, const FitResult& fr) {
  std::string buf = "field,value\n";
  buf += "loglik," + format_double(fr.loglik) + "\n";
  buf += "deviance," + format_double(fr.deviance) + "\n";
  buf += "bic," + format_double(fr.bic) + "\n";
  buf += "df," + std::to_string(fr.df) + "\n";
  buf += "gamma_len," + std::to_string(fr.coeff.gamma.size()) + "\n";
  buf += "converged," + std::to_string(fr.converged ? 1 : 0) + "\n";
  buf += "best_start," + std::to_string(fr.best_start) + "\n";
  if (fr.cp_rank >= 0) buf += "cp_rank," + std::to_string(fr.cp_rank) + "\n";
  for (std::size_t i = 0; i < fr.loglik_trace.size(); ++i)
    buf += "trace_" + std::to_string(i) + "," + format_double(fr.loglik_trace[i]) + "\n";
  atomic_write_bytes(path, buf);
}

void write_manifest(const fs::path& path, const RunManifest& m) {
  std::string buf;
  buf += "command: " + m.command_line + "\n";
  buf += "version: " + m.version + "\n";
  buf += "seed: " + std::to_string(m.seed) + "\n";
  for (const auto& [k, v] : m.options) buf += "option " + k + ": " + v + "\n";
  buf += "wall_seconds: " + format_double(m.wall_seconds) + "\n";
  for (const auto& [p, d] : m.inputs) buf += "input " + p + " digest " + d + "\n";
  for (const auto& [p, d] : m.outputs) buf += "output " + p + " digest " + d + "\n";
  atomic_write_bytes(path, buf);
}

std::string file_digest(const fs::path& path) {
  const std::string bytes = slurp(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tensorreg
