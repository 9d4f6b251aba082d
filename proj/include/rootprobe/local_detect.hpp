#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rootprobe::local {

enum class Category { package, binary, permission, tracer, preload };
enum class CheckResult { found, not_found, error, skipped };

std::string_view to_string(Category c);
std::string_view to_string(CheckResult r);

struct IndicatorCheck {
  std::string id;
  Category category = Category::binary;
  CheckResult result = CheckResult::not_found;
  std::string detail;
};

struct RootReport {
  std::vector<IndicatorCheck> checks;
  std::size_t found_count = 0;
  std::string tendency;
};

/// Called with the root-relative path of every filesystem probe.
using AccessHook = std::function<void(const std::string& relative_path)>;

/// All paths except `fs_root` are relative to `fs_root` and resolved as if it were `/`;
/// symlinks cannot escape it.
struct ScanConfig {
  std::filesystem::path fs_root = "/";
  std::vector<std::string> su_paths = {"system/bin/su",     "system/xbin/su",    "sbin/su",
                                       "su/bin/su",         "data/local/bin/su", "data/local/xbin/su"};
  std::vector<std::string> known_packages = {"com.topjohnwu.magisk"};
  /// Directory with one entry per installed package, or a manifest file with one
  /// identifier per line ("package:" prefixes and trailing fields are ignored).
  std::string package_source = "data/data";
  std::vector<std::string> system_dirs = {"system", "system/bin", "system/xbin", "vendor", "sbin"};
  std::string canary_path = "tmp/rootprobe_test_canary";
  std::string preload_env_var = "LD_PRELOAD";
  std::string preload_config_path = "etc/ld.so.preload";
  AccessHook on_access;
};

/// Overrides ScanConfig fields from a JSON object; unknown keys raise ParseError.
ScanConfig load_scan_config(const std::filesystem::path& file, ScanConfig base = {});

IndicatorCheck check_su_binaries(const ScanConfig& cfg);
IndicatorCheck check_known_packages(const ScanConfig& cfg);
IndicatorCheck check_directory_permissions(const ScanConfig& cfg);

/// Reads the tracer field of the process status and tries a self-attach from a helper
/// child. Skipped where the facility is missing.
IndicatorCheck check_tracer();

/// Ways of reading a whole file; nullopt means the open failed.
struct FileReaders {
  std::function<std::optional<std::string>(const std::string& path)> dynamic_read;
  std::function<std::optional<std::string>(const std::string& path)> direct_read;
};

/// fopen/fread, resolved through the dynamic linker (and therefore interposable).
std::optional<std::string> read_via_dynamic_fopen(const std::string& path);
/// open/read issued as raw system calls, bypassing any interposed libc symbol.
std::optional<std::string> read_via_direct_syscall(const std::string& path);

/// Writes a canary file, reads it back through both readers and compares. Also reports
/// a non-empty preload environment variable or a present preload configuration file.
IndicatorCheck check_preload_discrepancy(const ScanConfig& cfg, const FileReaders& readers = {
                                             read_via_dynamic_fopen, read_via_direct_syscall});

/// Throws EmptyInput for an empty list.
RootReport aggregate_report(std::vector<IndicatorCheck> checks);

/// Runs every check above and aggregates them.
RootReport run_local_checks(const ScanConfig& cfg);

}  // namespace rootprobe::local
