#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "palace/error.hpp"
#include "palace/util/subprocess.hpp"

namespace palace {

/// Text-in, text-out model endpoint. Distillers and graders both talk to
/// one of these. Implementations must tolerate concurrent calls.
class TextProvider {
 public:
  virtual ~TextProvider() = default;
  virtual std::string complete(std::string_view prompt) = 0;
  virtual std::string name() const = 0;
};

/// Pipes the prompt to an external command's stdin and returns its stdout.
class CommandProvider final : public TextProvider {
 public:
  explicit CommandProvider(std::string command,
                           std::chrono::milliseconds timeout = std::chrono::seconds(60))
      : command_(std::move(command)), timeout_(timeout) {}

  std::string complete(std::string_view prompt) override {
    auto result = run_command(command_, prompt, timeout_);
    if (result.timed_out) throw Error(ErrorKind::provider, "command timed out: " + command_);
    if (result.exit_code != 0) {
      throw Error(ErrorKind::provider,
                  "command exited " + std::to_string(result.exit_code) + ": " + command_);
    }
    return std::move(result.out);
  }

  std::string name() const override { return "command:" + command_; }

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
};

/// Wraps a callable; the scripted test doubles are built from these.
class FunctionProvider final : public TextProvider {
 public:
  FunctionProvider(std::string name, std::function<std::string(std::string_view)> fn)
      : name_(std::move(name)), fn_(std::move(fn)) {}

  std::string complete(std::string_view prompt) override { return fn_(prompt); }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  std::function<std::string(std::string_view)> fn_;
};

/// The environment variable, when set, overrides a configured command.
inline std::string command_from_env(const char* variable, std::string fallback) {
  if (const char* v = std::getenv(variable); v != nullptr && *v != '\0') return v;
  return fallback;
}

}  // namespace palace
