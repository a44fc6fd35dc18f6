#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <filesystem>
#include <string>

#include "palace/error.hpp"
#include "palace/service/config.hpp"

namespace palace::service {

/// File layout of a store directory.
struct StorePaths {
  std::filesystem::path root;
  std::filesystem::path index_dir;
  std::filesystem::path report_dir;

  explicit StorePaths(const PipelineConfig& c) : root(c.store_dir()), index_dir(c.index_dir()), report_dir(c.report_dir()) {}

  std::filesystem::path corpus() const { return root / "corpus.jsonl"; }
  std::filesystem::path exchanges() const { return root / "exchanges.jsonl"; }
  std::filesystem::path ingest_report() const { return root / "ingest.json"; }
  std::filesystem::path objects() const { return root / "objects.jsonl"; }
  std::filesystem::path skip_list() const { return root / "skipped.jsonl"; }
  std::filesystem::path queries() const { return root / "queries.jsonl"; }
  std::filesystem::path runs_dir() const { return root / "runs"; }
  std::filesystem::path run_manifest() const { return runs_dir() / "manifest.json"; }
  std::filesystem::path grades() const { return root / "grades.jsonl"; }
  std::filesystem::path consensus() const { return root / "consensus.jsonl"; }
  std::filesystem::path data_quality() const { return root / "consensus_quality.json"; }
  std::filesystem::path lock() const { return root / ".lock"; }

  /// "full_text/exact/passthrough" -> runs/full_text__exact__passthrough.run
  std::filesystem::path run_file(std::string config_id) const {
    for (std::size_t at; (at = config_id.find('/')) != std::string::npos;) config_id.replace(at, 1, "__");
    return runs_dir() / (config_id + ".run");
  }
};

/// Exclusive advisory lock on the store; batch commands hold one for their
/// whole run so two writers never interleave.
class StoreLock {
 public:
  explicit StoreLock(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0) throw Error(ErrorKind::io, "cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      throw Error(ErrorKind::io, "store is locked by another command: " + path.string());
    }
  }
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;
  ~StoreLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

 private:
  int fd_ = -1;
};

}  // namespace palace::service
