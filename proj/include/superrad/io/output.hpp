#pragma once

// Output directory writer. Files are staged under temporary names and renamed
// into place; on failure every file written so far is removed. The manifest
// (config echo, version, wall-clock, CRC-32 per output, units, warnings) is
// written last.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <boost/crc.hpp>

#include "json.hpp"

#include "superrad/error.hpp"
#include "superrad/io/csv.hpp"
#include "superrad/io/svg.hpp"

namespace superrad::io {

inline constexpr const char* artifact_version = "1.0.0";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string crc32_hex(const std::string& bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", unsigned(crc.checksum()));
  return buf;
}

class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)), start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw IoError("cannot create output directory '" + dir_.string() + "'");
  }

  OutputWriter(const OutputWriter&) = delete;
  OutputWriter& operator=(const OutputWriter&) = delete;

  ~OutputWriter() {
    if (!committed_) discard();
  }

  const std::filesystem::path& dir() const { return dir_; }

  void write_text(const std::string& name, const std::string& content) {
    const auto final_path = dir_ / name;
    const auto tmp = dir_ / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
      out.write(content.data(), std::streamsize(content.size()));
      out.flush();
      if (!out) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw IoError("write failed for '" + tmp.string() + "'");
      }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      throw IoError("cannot move '" + tmp.string() + "' into place");
    }
    written_.push_back(final_path);
    checksums_[name] = crc32_hex(content);
  }

  void write_csv(const std::string& name, const Table& t) { write_text(name, to_csv(t)); }

  void write_json(const std::string& name, const nlohmann::json& j) { write_text(name, j.dump(2) + "\n"); }

  void write_svg(const std::string& name, const std::vector<Series>& series, const Axes& axes) {
    SvgPlot plot = render_svg(series, axes);
    for (auto& w : plot.warnings) warnings_.push_back(name + ": " + w);
    write_text(name, plot.document);
  }

  void warn(const std::string& w) { warnings_.push_back(w); }

  /// Writes manifest.json and keeps all outputs.
  void commit(const nlohmann::json& config_echo) {
    nlohmann::json m;
    m["artifact_version"] = artifact_version;
    m["config"] = config_echo;
    m["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["outputs"] = nlohmann::json::object();
    for (const auto& [name, crc] : checksums_) m["outputs"][name] = {{"crc32", crc}};
    m["units"] = {{"time", "1/gamma"}, {"length", "lambda"}, {"rate", "gamma"}};
    m["warnings"] = warnings_;
    write_json("manifest.json", m);
    committed_ = true;
  }

  /// Removes every file written so far.
  void discard() {
    for (const auto& p : written_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
    written_.clear();
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::filesystem::path dir_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::filesystem::path> written_;
  std::map<std::string, std::string> checksums_;
  std::vector<std::string> warnings_;
  bool committed_ = false;
};

}  // namespace superrad::io
