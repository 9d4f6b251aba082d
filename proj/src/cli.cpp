#include "rootprobe/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "rootprobe/classifier.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/local_detect.hpp"
#include "rootprobe/profiles_io.hpp"
#include "rootprobe/prober.hpp"
#include "rootprobe/service_scan.hpp"
#include "rootprobe/simulator.hpp"

namespace rootprobe::cli {
namespace {

using nlohmann::json;

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted = true; }

enum class Format { plain, structured };

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const stats::SummaryStats& s) {
  return {{"n", s.n},           {"mean", s.mean},
          {"stddev", s.stddev}, {"min", optional_json(s.min)},
          {"max", optional_json(s.max)}, {"median", optional_json(s.median)},
          {"p95", optional_json(s.p95)}};
}

json to_json(const stats::ComparisonResult& c) {
  return {{"t_statistic", finite_or_null(c.t_statistic)},
          {"degrees_of_freedom", finite_or_null(c.degrees_of_freedom)},
          {"mean_ratio", finite_or_null(c.mean_ratio)},
          {"z_distance_a", finite_or_null(c.z_distance_a)},
          {"z_distance_b", finite_or_null(c.z_distance_b)}};
}

std::string fmt_ms(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_ms(*v) : "-"; }

void print_summary_line(std::ostream& out, const std::string& label, const stats::SummaryStats& s) {
  out << std::left << std::setw(8) << label << " n=" << s.n << " mean=" << fmt_ms(s.mean)
      << " stddev=" << fmt_ms(s.stddev) << " min=" << fmt_opt(s.min) << " median="
      << fmt_opt(s.median) << " p95=" << fmt_opt(s.p95) << " max=" << fmt_opt(s.max) << "\n";
}

struct ProfileSource {
  std::string spec;  // "builtin" or a path; empty = environment/builtin

  std::vector<DeviceProfile> load() const {
    std::string effective = spec;
    if (effective.empty()) {
      const char* env = std::getenv(io::kProfilesEnvVar);
      effective = (env != nullptr && *env != '\0') ? env : "builtin";
    }
    if (effective == "builtin") return builtin_profiles();
    return io::load_profiles(effective);
  }
};

const DeviceProfile& require_profile(const std::vector<DeviceProfile>& profiles,
                                     const std::string& key) {
  const DeviceProfile* p = find_profile(profiles, key);
  if (p == nullptr) throw ValidationError("no profile named " + key);
  return *p;
}

struct ProbeOptions {
  std::string target;
  std::uint16_t port = 53;
  std::size_t runs = 3;
  std::size_t queries = 100;
  double gap_ms = 100.0;
  double timeout_ms = 2000.0;
  std::string thermal = "unknown";
  std::size_t discard_first = 0;
  std::uint16_t source_port = 0;
  std::optional<std::uint64_t> seed;
  bool no_overhead = false;

  void add_to(CLI::App* cmd, bool target_positional) {
    if (target_positional)
      cmd->add_option("target", target, "Target IPv4 address (a.b.c.d[:port])")->required();
    cmd->add_option("--port", port, "Target UDP port")->capture_default_str();
    cmd->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--queries", queries, "Queries per run")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--gap", gap_ms, "Gap between queries in ms")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--timeout", timeout_ms, "Per-query timeout in ms")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--thermal", thermal, "Operator-declared device state")
        ->check(CLI::IsMember({"warm", "cold", "unknown"}))
        ->capture_default_str();
    cmd->add_option("--discard-first", discard_first, "Unrecorded warm-up queries per run");
    cmd->add_option("--source-port", source_port, "Fixed source port (0 = fresh per query)");
    cmd->add_option("--seed", seed, "Seed for transaction ids");
    cmd->add_flag("--no-overhead", no_overhead, "Skip the loopback overhead estimate");
  }

  ProbeConfig config() const {
    ProbeConfig c;
    c.target = net::Endpoint::parse(target, port);
    c.runs = runs;
    c.queries_per_run = queries;
    c.inter_query_gap_ms = gap_ms;
    c.timeout_ms = timeout_ms;
    c.thermal_state = parse_thermal_state(thermal);
    c.discard_first = discard_first;
    c.source_port = source_port;
    c.id_seed = seed;
    c.measure_overhead = !no_overhead;
    return c;
  }
};

std::vector<std::vector<double>> rtts_by_run(const std::vector<Sample>& samples) {
  std::map<std::size_t, std::vector<double>> runs;
  for (const auto& s : samples) {
    auto& run = runs[s.run_index];
    if (s.rtt_ms) run.push_back(*s.rtt_ms);
  }
  std::vector<std::vector<double>> out;
  for (auto& [index, rtts] : runs) out.push_back(std::move(rtts));
  return out;
}

json campaign_json(const Campaign& c) {
  auto counts = c.counts();
  json runs = json::array();
  for (std::size_t r = 0; r < c.run_count(); ++r) {
    auto rtts = c.answered_rtts(r);
    runs.push_back(rtts.empty() ? json(nullptr) : to_json(stats::summarize(rtts)));
  }
  auto all = c.answered_rtts();
  return {{"target", c.config.target.to_string()},
          {"runs", runs},
          {"pooled", all.empty() ? json(nullptr) : to_json(stats::summarize(all))},
          {"samples", c.samples.size()},
          {"answered", counts.answered},
          {"timeout", counts.timeout},
          {"malformed", counts.malformed},
          {"id_mismatch", counts.id_mismatch},
          {"loss_rate", c.loss_rate()},
          {"tool_overhead_ms", c.tool_overhead_ms},
          {"thermal_state", to_string(c.config.thermal_state)},
          {"partial", c.partial},
          {"abort_reason", c.abort_reason}};
}

void print_campaign(std::ostream& out, const Campaign& c) {
  auto counts = c.counts();
  out << "target " << c.config.target.to_string() << ": " << c.samples.size() << " samples, "
      << counts.answered << " answered, loss rate " << std::setprecision(3) << c.loss_rate()
      << "\n";
  for (std::size_t r = 0; r < c.run_count(); ++r) {
    auto rtts = c.answered_rtts(r);
    if (rtts.empty())
      out << "run " << r << "    no answered samples\n";
    else
      print_summary_line(out, "run " + std::to_string(r), stats::summarize(rtts));
  }
  auto all = c.answered_rtts();
  if (!all.empty()) print_summary_line(out, "pooled", stats::summarize(all));
  out << "tool overhead estimate " << fmt_ms(c.tool_overhead_ms)
      << " ms (not subtracted from rtts)\n";
  if (c.partial) out << "campaign aborted early: " << c.abort_reason << "\n";
}

json verdict_json(const TendencyVerdict& v, const DeviceProfile& rooted, const DeviceProfile& stock) {
  json j = {{"score", v.score},
            {"label", to_string(v.label)},
            {"observed", to_json(v.observed)},
            {"rooted_reference", rooted.key()},
            {"stock_reference", stock.key()},
            {"distance_to_rooted", finite_or_null(v.distance_to_rooted)},
            {"distance_to_stock", finite_or_null(v.distance_to_stock)},
            {"reference_separation", finite_or_null(v.reference_separation)},
            {"versus_rooted", v.versus_rooted ? to_json(*v.versus_rooted) : json(nullptr)},
            {"versus_stock", v.versus_stock ? to_json(*v.versus_stock) : json(nullptr)},
            {"warnings", v.warnings}};
  return j;
}

void print_verdict(std::ostream& out, const TendencyVerdict& v, const DeviceProfile& rooted,
                   const DeviceProfile& stock) {
  out << "label: " << to_string(v.label) << "\n";
  out << "score: " << std::setprecision(4) << v.score << " (0 = " << stock.key()
      << ", 1 = " << rooted.key() << ")\n";
  print_summary_line(out, "observed", v.observed);
  out << "distance to " << rooted.key() << ": " << v.distance_to_rooted << " sd\n";
  out << "distance to " << stock.key() << ": " << v.distance_to_stock << " sd\n";
  if (v.versus_rooted)
    out << "welch vs " << rooted.key() << ": t=" << v.versus_rooted->t_statistic
        << " df=" << v.versus_rooted->degrees_of_freedom << "\n";
  if (v.versus_stock)
    out << "welch vs " << stock.key() << ": t=" << v.versus_stock->t_statistic
        << " df=" << v.versus_stock->degrees_of_freedom << "\n";
  for (const auto& w : v.warnings) out << "warning: " << w << "\n";
}

json profile_json(const DeviceProfile& p) {
  json runs = json::array();
  for (const auto& r : p.runs) runs.push_back(to_json(r));
  return {{"key", p.key()},
          {"device_label", p.device_label},
          {"configuration", to_string(p.configuration)},
          {"thermal_state", to_string(p.thermal_state)},
          {"runs", runs},
          {"pooled", to_json(p.pooled())}};
}

json report_json(const local::RootReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"id", c.id},
                      {"category", local::to_string(c.category)},
                      {"result", local::to_string(c.result)},
                      {"detail", c.detail}});
  return {{"checks", checks}, {"found_count", r.found_count}, {"tendency", r.tendency}};
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Remote and local root-indicator probing toolkit", "rootprobe"};
  app.require_subcommand(1);
  std::string format_text = "plain";
  app.add_option("--format", format_text, "Output format")
      ->check(CLI::IsMember({"plain", "structured"}))
      ->capture_default_str();

  // scan
  auto* scan = app.add_subcommand("scan", "Check that a hotspot exposes a usable DNS service");
  std::string scan_target;
  std::vector<std::string> scan_ports;
  double scan_timeout = 1000.0;
  std::uint16_t scan_dns_port = 53;
  scan->add_option("target", scan_target, "Target IPv4 address")->required();
  scan->add_option("--ports", scan_ports, "Ports to probe, e.g. 53/udp 80/tcp");
  scan->add_option("--timeout", scan_timeout, "Per-probe timeout in ms")->check(CLI::PositiveNumber);
  scan->add_option("--dns-port", scan_dns_port, "UDP port of the DNS service");

  // probe
  auto* probe = app.add_subcommand("probe", "Run a timed DNS query campaign");
  ProbeOptions probe_opts;
  probe_opts.add_to(probe, true);
  std::string probe_out;
  probe->add_option("--out", probe_out, "Write per-sample CSV to this file");

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "Classify a campaign against reference profiles");
  std::string classify_input;
  ProbeOptions classify_probe;
  ProfileSource classify_profiles;
  std::string rooted_key = "S5-rooted";
  std::string stock_key = "S5-stock";
  ClassifierThresholds thresholds;
  auto* input_opt = classify_cmd->add_option("--input", classify_input, "Campaign CSV to classify");
  auto* target_opt =
      classify_cmd->add_option("--target", classify_probe.target, "Probe this target first");
  input_opt->excludes(target_opt);
  classify_probe.add_to(classify_cmd, false);
  classify_cmd->add_option("--profiles", classify_profiles.spec, "Profile file or 'builtin'");
  classify_cmd->add_option("--rooted", rooted_key, "Rooted reference profile")->capture_default_str();
  classify_cmd->add_option("--stock", stock_key, "Stock reference profile")->capture_default_str();
  classify_cmd->add_option("--margin", thresholds.margin, "Inconclusive band half-width")
      ->check(CLI::Range(0.0, 0.5))
      ->capture_default_str();
  classify_cmd->add_option("--separability", thresholds.separability,
                           "Minimum reference mean ratio")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run an emulated hotspot DNS responder");
  std::string sim_profile;
  ProfileSource sim_profiles;
  std::optional<double> sim_mean;
  double sim_stddev = 0.0;
  double sim_floor = sim::kDefaultFloorMs;
  double sim_drop = 0.0;
  std::uint64_t sim_seed = 1;
  std::uint16_t sim_port = 5353;
  std::string sim_bind = "127.0.0.1";
  double sim_duration = 0.0;
  auto* profile_opt = simulate->add_option("--profile", sim_profile, "Profile to emulate");
  auto* mean_opt = simulate->add_option("--mean", sim_mean, "Mean delay in ms");
  profile_opt->excludes(mean_opt);
  simulate->add_option("--stddev", sim_stddev, "Delay standard deviation in ms")
      ->check(CLI::NonNegativeNumber);
  simulate->add_option("--floor", sim_floor, "Minimum delay in ms")->check(CLI::NonNegativeNumber);
  simulate->add_option("--drop", sim_drop, "Drop probability")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", sim_seed, "Delay generator seed");
  simulate->add_option("--port", sim_port, "UDP port to listen on (0 = ephemeral)")
      ->capture_default_str();
  simulate->add_option("--bind", sim_bind, "Address to listen on")->capture_default_str();
  simulate->add_option("--profiles", sim_profiles.spec, "Profile file or 'builtin'");
  simulate->add_option("--duration", sim_duration, "Stop after this many seconds (0 = until interrupted)")
      ->check(CLI::NonNegativeNumber);

  // local-check
  auto* local_check = app.add_subcommand("local-check", "Scan this host for root indicators");
  std::string fs_root;
  std::string scan_config;
  local_check->add_option("--fs-root", fs_root, "Filesystem root to scan");
  local_check->add_option("--config", scan_config, "JSON file overriding indicator lists");

  // profiles
  auto* profiles_cmd = app.add_subcommand("profiles", "Inspect or export reference profiles");
  ProfileSource profiles_src;
  profiles_cmd->add_option("--profiles", profiles_src.spec, "Profile file or 'builtin'");
  profiles_cmd->require_subcommand(0, 1);
  auto* p_list = profiles_cmd->add_subcommand("list", "List profile keys");
  auto* p_show = profiles_cmd->add_subcommand("show", "Show one profile");
  std::string show_key;
  p_show->add_option("label", show_key, "Profile key, e.g. S5-rooted")->required();
  auto* p_export = profiles_cmd->add_subcommand("export", "Write profiles to a file");
  std::string export_path;
  p_export->add_option("file", export_path, "Destination")->required();
  (void)p_list;

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kUsageError;
  }
  const Format format = format_text == "structured" ? Format::structured : Format::plain;

  try {
    if (*scan) {
      auto ports = default_scan_ports();
      if (!scan_ports.empty()) {
        ports.clear();
        for (const auto& p : scan_ports) ports.push_back(PortSpec::parse(p));
      }
      auto target = net::Endpoint::parse(scan_target, 0);
      auto report = scan_services(target.address, ports, scan_timeout, scan_dns_port);
      if (format == Format::structured) {
        json ports_json = json::array();
        for (const auto& r : report.probed_ports)
          ports_json.push_back({{"port", r.spec.port},
                                {"transport", to_string(r.spec.transport)},
                                {"state", to_string(r.state)}});
        out << json{{"target", target.address_string()},
                    {"dns_functional", report.dns_functional},
                    {"dns_rtt_hint_ms", optional_json(report.dns_rtt_hint_ms)},
                    {"probed_ports", ports_json}}
                   .dump(2)
            << "\n";
      } else {
        out << "target " << target.address_string() << "\n";
        out << "dns functional: " << (report.dns_functional ? "yes" : "no");
        if (report.dns_rtt_hint_ms) out << " (rtt " << fmt_ms(*report.dns_rtt_hint_ms) << " ms)";
        out << "\n";
        for (const auto& r : report.probed_ports)
          out << std::right << std::setw(5) << r.spec.port << "/" << to_string(r.spec.transport)
              << "  " << to_string(r.state) << "\n";
      }
      return kSuccess;
    }

    if (*probe) {
      auto config = probe_opts.config();
      auto campaign = run_campaign(config);
      if (!probe_out.empty()) io::write_file(probe_out, io::export_campaign_csv(campaign));
      if (format == Format::structured)
        out << campaign_json(campaign).dump(2) << "\n";
      else
        print_campaign(out, campaign);
      if (campaign.partial) {
        err << "error: " << campaign.abort_reason << "\n";
        return kOperationalError;
      }
      return kSuccess;
    }

    if (*classify_cmd) {
      if (classify_input.empty() && classify_probe.target.empty())
        throw CLI::RequiredError("--input or --target");
      auto profiles = classify_profiles.load();
      const auto& rooted = require_profile(profiles, rooted_key);
      const auto& stock = require_profile(profiles, stock_key);

      std::vector<Sample> samples;
      ThermalState thermal = parse_thermal_state(classify_probe.thermal);
      if (!classify_input.empty()) {
        samples = io::import_campaign_csv(io::read_file(classify_input));
      } else {
        auto campaign = run_campaign(classify_probe.config());
        if (campaign.partial) throw TransportError(campaign.abort_reason);
        samples = campaign.samples;
      }
      auto verdict = classify_rtts(rtts_by_run(samples), rooted, stock, thresholds, thermal);
      if (format == Format::structured)
        out << verdict_json(verdict, rooted, stock).dump(2) << "\n";
      else
        print_verdict(out, verdict, rooted, stock);
      return verdict.label == VerdictLabel::rooted_leaning ? kRootedLeaning : kSuccess;
    }

    if (*simulate) {
      sim::LatencyModel model;
      if (!sim_profile.empty()) {
        auto profiles = sim_profiles.load();
        auto pooled = require_profile(profiles, sim_profile).pooled();
        model = sim::fit_latency_model(pooled.mean, pooled.stddev, sim_floor);
      } else if (sim_mean) {
        model = sim::fit_latency_model(*sim_mean, sim_stddev, sim_floor);
      } else {
        throw CLI::RequiredError("--profile or --mean");
      }
      model.drop_probability = sim_drop;
      model.seed = sim_seed;

      sim::SimDeviceConfig config;
      config.listen = net::Endpoint::parse(sim_bind, sim_port);
      config.model = model;
      auto responder = sim::serve(config);

      if (format == Format::structured) {
        out << json{{"listening", responder->endpoint().to_string()},
                    {"family", model.family == sim::LatencyFamily::lognormal ? "lognormal" : "fixed"},
                    {"mean", model.target_mean},
                    {"stddev", model.target_stddev},
                    {"floor", model.floor},
                    {"mu", model.mu},
                    {"sigma", model.sigma},
                    {"drop_probability", model.drop_probability},
                    {"seed", model.seed}}
                   .dump()
            << std::endl;
      } else {
        out << "listening on " << responder->endpoint().to_string() << " (mean "
            << fmt_ms(model.target_mean) << " ms, stddev " << fmt_ms(model.target_stddev)
            << " ms, floor " << fmt_ms(model.floor) << " ms)" << std::endl;
      }

      g_interrupted = false;
      auto old_int = std::signal(SIGINT, on_interrupt);
      auto old_term = std::signal(SIGTERM, on_interrupt);
      const auto start = std::chrono::steady_clock::now();
      while (!g_interrupted) {
        if (sim_duration > 0.0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >=
                sim_duration)
          break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
      std::signal(SIGINT, old_int);
      std::signal(SIGTERM, old_term);
      responder->stop();
      auto counters = responder->counters();
      err << "responder stopped: " << counters.received << " received, " << counters.answered
          << " answered, " << counters.dropped << " dropped, " << counters.ignored
          << " ignored\n";
      return kSuccess;
    }

    if (*local_check) {
      local::ScanConfig cfg;
      if (!scan_config.empty()) cfg = local::load_scan_config(scan_config, cfg);
      if (!fs_root.empty()) cfg.fs_root = fs_root;
      auto report = local::run_local_checks(cfg);
      if (format == Format::structured) {
        out << report_json(report).dump(2) << "\n";
      } else {
        for (const auto& c : report.checks)
          out << std::left << std::setw(24) << c.id << std::setw(10) << local::to_string(c.result)
              << c.detail << "\n";
        out << "found: " << report.found_count << "\n" << "tendency: " << report.tendency << "\n";
      }
      return kSuccess;
    }

    if (*profiles_cmd) {
      auto profiles = profiles_src.load();
      if (*p_show) {
        const auto& p = require_profile(profiles, show_key);
        if (format == Format::structured) {
          out << profile_json(p).dump(2) << "\n";
        } else {
          out << p.key() << " (" << to_string(p.thermal_state) << ")\n";
          for (std::size_t i = 0; i < p.runs.size(); ++i)
            print_summary_line(out, "run " + std::to_string(i), p.runs[i]);
          print_summary_line(out, "pooled", p.pooled());
        }
      } else if (*p_export) {
        io::save_profiles(export_path, profiles);
        if (format == Format::structured)
          out << json{{"exported", profiles.size()}, {"file", export_path}}.dump() << "\n";
        else
          out << "wrote " << profiles.size() << " profiles to " << export_path << "\n";
      } else {
        if (format == Format::structured) {
          json keys = json::array();
          for (const auto& p : profiles) keys.push_back(p.key());
          out << keys.dump() << "\n";
        } else {
          for (const auto& p : profiles) out << p.key() << "\n";
        }
      }
      return kSuccess;
    }
  } catch (const CLI::ParseError& e) {
    err << "usage error: missing " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kOperationalError;
  }
  return kUsageError;
}

}  // namespace rootprobe::cli
