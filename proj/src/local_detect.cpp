#include "rootprobe/local_detect.hpp"

#include <dirent.h>
#include <fcntl.h>
#include <linux/openat2.h>
#include <sys/prctl.h>
#include <sys/ptrace.h>
#include <sys/stat.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/net.hpp"

namespace rootprobe::local {
namespace {

using net::FileDescriptor;

std::string join(const std::vector<std::string>& items, std::string_view sep = ", ") {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += sep;
    out += item;
  }
  return out;
}

std::string relative(std::string_view path) {
  while (!path.empty() && path.front() == '/') path.remove_prefix(1);
  return path.empty() ? std::string(".") : std::string(path);
}

// Opens paths beneath fs_root as if fs_root were the filesystem root.
class RootedFs {
 public:
  explicit RootedFs(const ScanConfig& cfg) : hook_(cfg.on_access) {
    root_.reset(::open(cfg.fs_root.c_str(), O_PATH | O_DIRECTORY | O_CLOEXEC));
    if (!root_.valid()) root_errno_ = errno;
  }

  bool ok() const { return root_.valid(); }
  std::string root_error() const { return std::strerror(root_errno_); }

  // Returns a descriptor or -errno.
  int open(std::string_view path, int flags, mode_t mode = 0) const {
    std::string rel = relative(path);
    if (hook_) hook_(rel);
    open_how how{};
    how.flags = static_cast<std::uint64_t>(flags | O_CLOEXEC);
    how.mode = (flags & O_CREAT) ? mode : 0;
    how.resolve = RESOLVE_IN_ROOT | RESOLVE_NO_MAGICLINKS;
    long fd = ::syscall(SYS_openat2, root_.get(), rel.c_str(), &how, sizeof how);
    if (fd >= 0) return static_cast<int>(fd);
    if (errno != ENOSYS) return -errno;

    // Pre-5.6 kernels: lexical containment only.
    auto normal = std::filesystem::path(rel).lexically_normal();
    if (!normal.empty() && *normal.begin() == "..") return -EACCES;
    int fallback = ::openat(root_.get(), normal.c_str(), flags | O_CLOEXEC | O_NOFOLLOW, mode);
    return fallback >= 0 ? fallback : -errno;
  }

  std::optional<struct stat> stat(std::string_view path, int& err) const {
    FileDescriptor fd(open(path, O_PATH));
    if (!fd.valid()) {
      err = -fd.release();
      return std::nullopt;
    }
    struct stat st {};
    if (::fstat(fd.get(), &st) != 0) {
      err = errno;
      return std::nullopt;
    }
    return st;
  }

 private:
  FileDescriptor root_;
  int root_errno_ = 0;
  AccessHook hook_;
};

bool in_groups(gid_t gid) {
  if (gid == ::getegid()) return true;
  int n = ::getgroups(0, nullptr);
  if (n <= 0) return false;
  std::vector<gid_t> groups(static_cast<std::size_t>(n));
  n = ::getgroups(n, groups.data());
  for (int i = 0; i < n; ++i)
    if (groups[static_cast<std::size_t>(i)] == gid) return true;
  return false;
}

// Unix permission classes: owner bits if we own the file, else group, else other.
bool mode_grants(const struct stat& st, mode_t owner_bit, mode_t group_bit, mode_t other_bit) {
  if (st.st_uid == ::geteuid()) return (st.st_mode & owner_bit) != 0;
  if (in_groups(st.st_gid)) return (st.st_mode & group_bit) != 0;
  return (st.st_mode & other_bit) != 0;
}

bool executable_by_current_user(const struct stat& st) {
  if (::geteuid() == 0) return (st.st_mode & (S_IXUSR | S_IXGRP | S_IXOTH)) != 0;
  return mode_grants(st, S_IXUSR, S_IXGRP, S_IXOTH);
}

std::optional<std::string> read_all(int fd) {
  std::string out;
  char buf[4096];
  for (;;) {
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    if (n == 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

IndicatorCheck make_check(std::string id, Category category) {
  IndicatorCheck c;
  c.id = std::move(id);
  c.category = category;
  return c;
}

std::vector<std::string> parse_manifest(const std::string& text) {
  std::vector<std::string> packages;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("package:", 0) == 0) line.erase(0, 8);
    std::istringstream fields(line);
    std::string id;
    if (fields >> id && id.front() != '#') {
      // "package:<apk path>=<id>" as printed by `pm list packages -f`.
      if (auto eq = id.rfind('='); eq != std::string::npos) id.erase(0, eq + 1);
      packages.push_back(id);
    }
  }
  return packages;
}

enum class TraceAttach { permitted, denied, unavailable };

TraceAttach try_self_attach() {
  int sync[2];
  if (::pipe2(sync, O_CLOEXEC) != 0) return TraceAttach::unavailable;
  const pid_t target = ::getpid();
  pid_t child = ::fork();
  if (child < 0) {
    ::close(sync[0]);
    ::close(sync[1]);
    return TraceAttach::unavailable;
  }
  if (child == 0) {
    ::close(sync[1]);
    char go;
    while (::read(sync[0], &go, 1) < 0 && errno == EINTR) {
    }
    // Seizing does not stop the target; our exit detaches it again.
    long r = ::ptrace(PTRACE_SEIZE, target, nullptr, nullptr);
    ::_exit(r == 0 ? 0 : (errno == EPERM ? 1 : 2));
  }
  ::close(sync[0]);
  // Lift Yama's ancestor-only restriction for this one helper; harmless without Yama.
  ::prctl(PR_SET_PTRACER, child, 0, 0, 0);
  char go = 1;
  (void)!::write(sync[1], &go, 1);
  ::close(sync[1]);
  int status = 0;
  while (::waitpid(child, &status, 0) < 0 && errno == EINTR) {
  }
  ::prctl(PR_SET_PTRACER, 0, 0, 0, 0);
  if (!WIFEXITED(status)) return TraceAttach::unavailable;
  switch (WEXITSTATUS(status)) {
    case 0: return TraceAttach::permitted;
    case 1: return TraceAttach::denied;
    default: return TraceAttach::unavailable;
  }
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::package: return "package";
    case Category::binary: return "binary";
    case Category::permission: return "permission";
    case Category::tracer: return "tracer";
    case Category::preload: return "preload";
  }
  return "binary";
}

std::string_view to_string(CheckResult r) {
  switch (r) {
    case CheckResult::found: return "found";
    case CheckResult::not_found: return "not_found";
    case CheckResult::error: return "error";
    case CheckResult::skipped: return "skipped";
  }
  return "error";
}

ScanConfig load_scan_config(const std::filesystem::path& file, ScanConfig base) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open scan config " + file.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(file.string() + ": top level must be an object");

  auto string_list = [&](const nlohmann::json& v, const std::string& key) {
    if (!v.is_array()) throw ParseError(file.string() + ": " + key + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : v) {
      if (!item.is_string())
        throw ParseError(file.string() + ": " + key + " must be an array of strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  };
  auto string_value = [&](const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw ParseError(file.string() + ": " + key + " must be a string");
    return v.get<std::string>();
  };

  for (const auto& [key, value] : doc.items()) {
    if (key == "fs_root") base.fs_root = string_value(value, key);
    else if (key == "su_paths") base.su_paths = string_list(value, key);
    else if (key == "known_packages") base.known_packages = string_list(value, key);
    else if (key == "package_source") base.package_source = string_value(value, key);
    else if (key == "system_dirs") base.system_dirs = string_list(value, key);
    else if (key == "canary_path") base.canary_path = string_value(value, key);
    else if (key == "preload_env_var") base.preload_env_var = string_value(value, key);
    else if (key == "preload_config_path") base.preload_config_path = string_value(value, key);
    else throw ParseError(file.string() + ": unknown key " + key);
  }
  return base;
}

IndicatorCheck check_su_binaries(const ScanConfig& cfg) {
  auto check = make_check("su-binary", Category::binary);
  if (cfg.su_paths.empty()) {
    check.result = CheckResult::skipped;
    check.detail = "no su candidate paths configured";
    return check;
  }
  RootedFs fs(cfg);
  if (!fs.ok()) {
    check.result = CheckResult::skipped;
    check.detail = "cannot open fs root: " + fs.root_error();
    return check;
  }

  std::vector<std::string> matches, non_executable, unreadable;
  for (const auto& path : cfg.su_paths) {
    int err = 0;
    auto st = fs.stat(path, err);
    if (!st) {
      if (err == EACCES || err == EPERM) unreadable.push_back(path);
      continue;
    }
    if (!S_ISREG(st->st_mode)) continue;
    if (executable_by_current_user(*st))
      matches.push_back(path);
    else
      non_executable.push_back(path);
  }

  check.result = matches.empty() ? CheckResult::not_found : CheckResult::found;
  std::vector<std::string> parts;
  if (!matches.empty()) parts.push_back("executable: " + join(matches));
  if (!non_executable.empty()) parts.push_back("present but not executable: " + join(non_executable));
  if (!unreadable.empty()) parts.push_back("permission denied (skipped): " + join(unreadable));
  check.detail = parts.empty() ? "no su binary at " + std::to_string(cfg.su_paths.size()) +
                                     " candidate paths"
                               : join(parts, "; ");
  return check;
}

IndicatorCheck check_known_packages(const ScanConfig& cfg) {
  auto check = make_check("known-packages", Category::package);
  if (cfg.known_packages.empty()) {
    check.result = CheckResult::skipped;
    check.detail = "no package identifiers configured";
    return check;
  }
  RootedFs fs(cfg);
  if (!fs.ok()) {
    check.result = CheckResult::error;
    check.detail = "cannot open fs root: " + fs.root_error();
    return check;
  }

  int err = 0;
  auto st = fs.stat(cfg.package_source, err);
  if (!st) {
    check.result = CheckResult::error;
    check.detail = "package source " + cfg.package_source + " unreadable: " + std::strerror(err);
    return check;
  }

  std::set<std::string> installed;
  if (S_ISDIR(st->st_mode)) {
    int fd = fs.open(cfg.package_source, O_RDONLY | O_DIRECTORY);
    DIR* dir = fd >= 0 ? ::fdopendir(fd) : nullptr;
    if (!dir) {
      if (fd >= 0) ::close(fd);
      check.result = CheckResult::error;
      check.detail = "package source " + cfg.package_source + " unreadable: " +
                     std::strerror(fd < 0 ? -fd : errno);
      return check;
    }
    while (dirent* entry = ::readdir(dir)) {
      std::string name = entry->d_name;
      if (name != "." && name != "..") installed.insert(name);
    }
    ::closedir(dir);
  } else {
    FileDescriptor fd(fs.open(cfg.package_source, O_RDONLY));
    std::optional<std::string> text = fd.valid() ? read_all(fd.get()) : std::nullopt;
    if (!text) {
      check.result = CheckResult::error;
      check.detail = "package manifest " + cfg.package_source + " unreadable";
      return check;
    }
    for (auto& id : parse_manifest(*text)) installed.insert(std::move(id));
  }

  std::vector<std::string> hits;
  for (const auto& id : cfg.known_packages)
    if (installed.contains(id)) hits.push_back(id);
  check.result = hits.empty() ? CheckResult::not_found : CheckResult::found;
  check.detail = hits.empty() ? "none of " + std::to_string(cfg.known_packages.size()) +
                                    " known packages among " + std::to_string(installed.size()) +
                                    " installed"
                              : "installed: " + join(hits);
  return check;
}

IndicatorCheck check_directory_permissions(const ScanConfig& cfg) {
  auto check = make_check("system-dir-permissions", Category::permission);
  RootedFs fs(cfg);
  if (!fs.ok()) {
    check.result = CheckResult::skipped;
    check.detail = "cannot open fs root: " + fs.root_error();
    return check;
  }

  const bool privileged = ::geteuid() == 0;
  std::vector<std::string> writable, skipped;
  std::size_t audited = 0;
  for (const auto& dir : cfg.system_dirs) {
    int err = 0;
    auto st = fs.stat(dir, err);
    if (!st) {
      skipped.push_back(dir + " (" + std::strerror(err) + ")");
      continue;
    }
    if (!S_ISDIR(st->st_mode)) {
      skipped.push_back(dir + " (not a directory)");
      continue;
    }
    ++audited;
    bool world = (st->st_mode & S_IWOTH) != 0;
    // A privileged scanner can write anything; only the mode bits say something then.
    bool user = !privileged && mode_grants(*st, S_IWUSR, S_IWGRP, S_IWOTH);
    if (world)
      writable.push_back(dir + " (world-writable)");
    else if (user)
      writable.push_back(dir + " (writable by current user)");
  }

  std::vector<std::string> parts;
  if (!writable.empty()) parts.push_back("writable: " + join(writable));
  if (!skipped.empty()) parts.push_back("skipped: " + join(skipped));
  if (privileged) parts.push_back("running privileged, only world-writable bits evaluated");
  if (!writable.empty())
    check.result = CheckResult::found;
  else if (audited == 0)
    check.result = CheckResult::skipped;
  else
    check.result = CheckResult::not_found;
  if (check.result == CheckResult::not_found)
    parts.insert(parts.begin(), std::to_string(audited) + " directories not writable");
  check.detail = join(parts, "; ");
  return check;
}

IndicatorCheck check_tracer() {
  auto check = make_check("tracer", Category::tracer);
  std::ifstream status("/proc/self/status");
  if (!status) {
    check.result = CheckResult::skipped;
    check.detail = "process status facility unavailable";
    return check;
  }
  std::optional<long> tracer;
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("TracerPid:", 0) == 0) {
      tracer = std::strtol(line.c_str() + 10, nullptr, 10);
      break;
    }
  }
  if (!tracer) {
    check.result = CheckResult::skipped;
    check.detail = "process status has no tracer field";
    return check;
  }
  if (*tracer != 0) {
    check.result = CheckResult::found;
    check.detail = "traced by pid " + std::to_string(*tracer);
    return check;
  }

  switch (try_self_attach()) {
    case TraceAttach::permitted:
      check.result = CheckResult::not_found;
      check.detail = "no tracer; self-attach permitted and released";
      break;
    case TraceAttach::denied:
      check.result = CheckResult::found;
      check.detail = "self-attach denied although status reports no tracer";
      break;
    case TraceAttach::unavailable:
      check.result = CheckResult::not_found;
      check.detail = "no tracer in process status; self-attach probe unavailable";
      break;
  }
  return check;
}

std::optional<std::string> read_via_dynamic_fopen(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  // An interposed fopen may hand back a bogus non-null sentinel; only trust real handles.
  if (f == nullptr || f == reinterpret_cast<std::FILE*>(-1)) return std::nullopt;
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  bool failed = std::ferror(f) != 0;
  std::fclose(f);
  if (failed) return std::nullopt;
  return out;
}

std::optional<std::string> read_via_direct_syscall(const std::string& path) {
  long fd = ::syscall(SYS_openat, AT_FDCWD, path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) return std::nullopt;
  std::string out;
  char buf[4096];
  bool failed = false;
  for (;;) {
    long n = ::syscall(SYS_read, fd, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      failed = true;
      break;
    }
    if (n == 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  ::syscall(SYS_close, fd);
  if (failed) return std::nullopt;
  return out;
}

IndicatorCheck check_preload_discrepancy(const ScanConfig& cfg, const FileReaders& readers) {
  auto check = make_check("preload-interposition", Category::preload);
  RootedFs fs(cfg);
  if (!fs.ok()) {
    check.result = CheckResult::error;
    check.detail = "cannot open fs root: " + fs.root_error();
    return check;
  }

  const std::filesystem::path canary_rel(relative(cfg.canary_path));
  const std::string parent_rel =
      canary_rel.has_parent_path() ? canary_rel.parent_path().string() : ".";
  const std::string name = canary_rel.filename().string();
  FileDescriptor parent(fs.open(parent_rel, O_PATH | O_DIRECTORY));
  FileDescriptor canary;
  if (parent.valid() && !name.empty())
    canary.reset(::openat(parent.get(), name.c_str(),
                          O_CREAT | O_WRONLY | O_TRUNC | O_NOFOLLOW | O_CLOEXEC, 0600));
  if (!canary.valid()) {
    check.result = CheckResult::error;
    check.detail = "cannot create canary " + cfg.canary_path + ": " +
                   std::strerror(parent.valid() ? errno : -parent.get());
    return check;
  }

  std::random_device rd;
  const std::string content =
      "rootprobe canary " + std::to_string(::getpid()) + " " + std::to_string(rd()) + "\n";
  bool written = ::write(canary.get(), content.data(), content.size()) ==
                 static_cast<ssize_t>(content.size());
  canary.reset();

  const std::string full_path = (cfg.fs_root / canary_rel).lexically_normal().string();
  std::optional<std::string> via_dynamic, via_direct;
  if (written) {
    via_dynamic = readers.dynamic_read(full_path);
    via_direct = readers.direct_read(full_path);
  }
  ::unlinkat(parent.get(), name.c_str(), 0);
  if (!written) {
    check.result = CheckResult::error;
    check.detail = "cannot write canary " + cfg.canary_path;
    return check;
  }

  std::vector<std::string> signals;
  std::vector<std::string> notes;
  if (!via_dynamic && via_direct) {
    signals.push_back("dynamic path failed, direct path succeeded");
  } else if (via_dynamic && !via_direct) {
    signals.push_back("direct path failed, dynamic path succeeded");
  } else if (via_dynamic && via_direct && *via_dynamic != *via_direct) {
    signals.push_back("canary contents differ between dynamic and direct reads");
  } else if (!via_dynamic && !via_direct) {
    notes.push_back("canary unreadable through both paths");
  }

  if (!cfg.preload_env_var.empty()) {
    const char* value = std::getenv(cfg.preload_env_var.c_str());
    if (value != nullptr && *value != '\0')
      signals.push_back("preload variable present (" + cfg.preload_env_var + "=" + value + ")");
  }

  if (!cfg.preload_config_path.empty()) {
    FileDescriptor conf(fs.open(cfg.preload_config_path, O_RDONLY));
    if (conf.valid()) {
      auto text = read_all(conf.get());
      bool has_entries = text && text->find_first_not_of(" \t\r\n") != std::string::npos;
      if (has_entries)
        signals.push_back("preload configuration file present (" + cfg.preload_config_path + ")");
    }
  }

  if (!signals.empty()) {
    check.result = CheckResult::found;
    signals.insert(signals.end(), notes.begin(), notes.end());
    check.detail = join(signals, "; ");
  } else if (!notes.empty()) {
    check.result = CheckResult::error;
    check.detail = join(notes, "; ");
  } else {
    check.result = CheckResult::not_found;
    check.detail = "dynamic and direct reads agree; no preload configured";
  }
  return check;
}

RootReport aggregate_report(std::vector<IndicatorCheck> checks) {
  if (checks.empty()) throw EmptyInput("no indicator checks to aggregate");
  std::set<std::string> ids;
  for (const auto& c : checks) {
    if (!ids.insert(c.id).second) throw ValidationError("duplicate check id " + c.id);
    if (c.result == CheckResult::error && c.detail.empty())
      throw ValidationError("check " + c.id + " errored without detail");
  }

  RootReport report;
  std::vector<std::string> errored;
  for (const auto& c : checks) {
    if (c.result == CheckResult::found) ++report.found_count;
    if (c.result == CheckResult::error) errored.push_back(c.id);
  }
  report.tendency = report.found_count >= 1
                        ? "rooted indicators present"
                        : "no indicators found; absence is not proof of an unrooted device";
  if (!errored.empty()) report.tendency += " (checks with errors: " + join(errored) + ")";
  report.checks = std::move(checks);
  return report;
}

RootReport run_local_checks(const ScanConfig& cfg) {
  return aggregate_report({check_su_binaries(cfg), check_known_packages(cfg),
                           check_directory_permissions(cfg), check_tracer(),
                           check_preload_discrepancy(cfg)});
}

}  // namespace rootprobe::local
