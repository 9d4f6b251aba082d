#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rootprobe/classifier.hpp"
#include "rootprobe/dns_wire.hpp"
#include "rootprobe/errors.hpp"
#include "rootprobe/local_detect.hpp"
#include "rootprobe/profiles_io.hpp"
#include "rootprobe/prober.hpp"
#include "rootprobe/service_scan.hpp"
#include "rootprobe/simulator.hpp"
#include "rootprobe/stats.hpp"

namespace py = pybind11;
using namespace rootprobe;

namespace {

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  std::string s = b;
  return {s.begin(), s.end()};
}

// Owns a running responder for use as a Python context manager.
class PySimulator {
 public:
  PySimulator(sim::LatencyModel model, const std::string& bind, std::uint16_t port,
              const std::string& answer_name) {
    config_.model = model;
    config_.listen = net::Endpoint::parse(bind, port);
    config_.answer_name = answer_name;
    responder_ = sim::serve(config_);
  }

  std::string address() const { return responder_->endpoint().to_string(); }
  std::uint16_t port() const { return responder_->endpoint().port; }
  py::dict counters() const {
    auto c = responder_->counters();
    py::dict d;
    d["received"] = c.received;
    d["answered"] = c.answered;
    d["dropped"] = c.dropped;
    d["ignored"] = c.ignored;
    return d;
  }
  void stop() {
    py::gil_scoped_release release;
    responder_->stop();
  }

 private:
  sim::SimDeviceConfig config_;
  std::unique_ptr<sim::Responder> responder_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "DNS timing probes, reference-profile classification and local root indicators";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<MalformedMessage>(m, "MalformedMessage", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());
  py::register_exception<EmptyInput>(m, "EmptyInput", base.ptr());
  py::register_exception<InsufficientSamples>(m, "InsufficientSamples", base.ptr());
  py::register_exception<InfeasibleModel>(m, "InfeasibleModel", base.ptr());
  auto parse_error = py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<VersionError>(m, "VersionError", parse_error.ptr());
  py::register_exception<StartupError>(m, "StartupError", base.ptr());

  // dns wire
  m.def("ptr_name_for_ipv4", [](const std::string& a) { return dns::ptr_name_for_ipv4(a).to_string(); });
  m.def(
      "encode_query",
      [](const std::string& qname, std::uint16_t id, std::uint16_t qtype, bool rd) {
        dns::DnsQuestion q;
        q.qname = dns::DomainName::parse(qname);
        q.qtype = qtype;
        return to_bytes(dns::encode_query(q, id, rd));
      },
      py::arg("qname"), py::arg("id"), py::arg("qtype") = dns::kTypePtr,
      py::arg("recursion_desired") = true);
  m.def("decode_message", [](const py::bytes& data) {
    auto msg = dns::decode_message(from_bytes(data));
    py::list questions;
    for (const auto& q : msg.questions)
      questions.append(py::make_tuple(q.qname.to_string(), q.qtype, q.qclass));
    py::dict d;
    d["id"] = msg.id;
    d["is_response"] = msg.is_response;
    d["recursion_desired"] = msg.recursion_desired;
    d["response_code"] = msg.response_code;
    d["questions"] = questions;
    d["answer_count"] = msg.answer_count;
    return d;
  });

  // stats
  py::class_<stats::SummaryStats>(m, "SummaryStats")
      .def(py::init(&stats::SummaryStats::from_moments), py::arg("n"), py::arg("mean"),
           py::arg("stddev"))
      .def_readwrite("n", &stats::SummaryStats::n)
      .def_readwrite("mean", &stats::SummaryStats::mean)
      .def_readwrite("stddev", &stats::SummaryStats::stddev)
      .def_readwrite("min", &stats::SummaryStats::min)
      .def_readwrite("max", &stats::SummaryStats::max)
      .def_readwrite("median", &stats::SummaryStats::median)
      .def_readwrite("p95", &stats::SummaryStats::p95)
      .def("__eq__", [](const stats::SummaryStats& a, const stats::SummaryStats& b) { return a == b; })
      .def("__repr__", [](const stats::SummaryStats& s) {
        return "SummaryStats(n=" + std::to_string(s.n) + ", mean=" + std::to_string(s.mean) +
               ", stddev=" + std::to_string(s.stddev) + ")";
      });
  py::class_<stats::ComparisonResult>(m, "ComparisonResult")
      .def_readonly("t_statistic", &stats::ComparisonResult::t_statistic)
      .def_readonly("degrees_of_freedom", &stats::ComparisonResult::degrees_of_freedom)
      .def_readonly("mean_ratio", &stats::ComparisonResult::mean_ratio)
      .def_readonly("z_distance_a", &stats::ComparisonResult::z_distance_a)
      .def_readonly("z_distance_b", &stats::ComparisonResult::z_distance_b);
  m.def("summarize", [](const std::vector<double>& xs) { return stats::summarize(xs); });
  m.def("pool", [](const std::vector<stats::SummaryStats>& runs) { return stats::pool(runs); });
  m.def("welch_t", &stats::welch_t);

  // profiles and classification
  py::enum_<ThermalState>(m, "ThermalState")
      .value("warm", ThermalState::warm)
      .value("cold", ThermalState::cold)
      .value("unknown", ThermalState::unknown);
  py::enum_<Configuration>(m, "Configuration")
      .value("rooted", Configuration::rooted)
      .value("stock", Configuration::stock);
  py::class_<DeviceProfile>(m, "DeviceProfile")
      .def(py::init<>())
      .def_readwrite("device_label", &DeviceProfile::device_label)
      .def_readwrite("configuration", &DeviceProfile::configuration)
      .def_readwrite("thermal_state", &DeviceProfile::thermal_state)
      .def_readwrite("runs", &DeviceProfile::runs)
      .def_property_readonly("key", &DeviceProfile::key)
      .def("pooled", &DeviceProfile::pooled)
      .def("__eq__", [](const DeviceProfile& a, const DeviceProfile& b) { return a == b; });
  m.def("builtin_profiles", &builtin_profiles);
  m.def("find_profile", [](const std::vector<DeviceProfile>& profiles, const std::string& key) {
    const DeviceProfile* p = find_profile(profiles, key);
    return p ? std::optional<DeviceProfile>(*p) : std::nullopt;
  });
  m.def("profiles_to_json", &io::profiles_to_json);
  m.def("profiles_from_json", [](const std::string& text) { return io::profiles_from_json(text); });
  m.def("save_profiles", &io::save_profiles);
  m.def("load_profiles", &io::load_profiles);

  py::class_<TendencyVerdict>(m, "TendencyVerdict")
      .def_readonly("score", &TendencyVerdict::score)
      .def_property_readonly("label", [](const TendencyVerdict& v) { return std::string(to_string(v.label)); })
      .def_readonly("observed", &TendencyVerdict::observed)
      .def_readonly("distance_to_rooted", &TendencyVerdict::distance_to_rooted)
      .def_readonly("distance_to_stock", &TendencyVerdict::distance_to_stock)
      .def_readonly("versus_rooted", &TendencyVerdict::versus_rooted)
      .def_readonly("versus_stock", &TendencyVerdict::versus_stock)
      .def_readonly("reference_separation", &TendencyVerdict::reference_separation)
      .def_readonly("warnings", &TendencyVerdict::warnings);
  m.def(
      "classify_rtts",
      [](const std::vector<std::vector<double>>& runs, const DeviceProfile& rooted,
         const DeviceProfile& stock, double margin, double separability, ThermalState thermal) {
        return classify_rtts(runs, rooted, stock, ClassifierThresholds{margin, separability}, thermal);
      },
      py::arg("runs"), py::arg("rooted"), py::arg("stock"), py::arg("margin") = 0.15,
      py::arg("separability") = 1.5, py::arg("thermal_state") = ThermalState::unknown);

  // simulator
  py::class_<sim::LatencyModel>(m, "LatencyModel")
      .def_property_readonly("family", [](const sim::LatencyModel& lm) {
        return lm.family == sim::LatencyFamily::lognormal ? "lognormal" : "fixed";
      })
      .def_readwrite("drop_probability", &sim::LatencyModel::drop_probability)
      .def_readwrite("seed", &sim::LatencyModel::seed)
      .def_readonly("target_mean", &sim::LatencyModel::target_mean)
      .def_readonly("target_stddev", &sim::LatencyModel::target_stddev)
      .def_readonly("floor", &sim::LatencyModel::floor)
      .def_readonly("mu", &sim::LatencyModel::mu)
      .def_readonly("sigma", &sim::LatencyModel::sigma)
      .def("analytic_mean", &sim::LatencyModel::analytic_mean)
      .def("analytic_stddev", &sim::LatencyModel::analytic_stddev);
  m.def("fit_latency_model", &sim::fit_latency_model, py::arg("mean"), py::arg("stddev"),
        py::arg("floor") = sim::kDefaultFloorMs);
  m.def("sample_delay", &sim::sample_delay);
  py::class_<PySimulator>(m, "Simulator")
      .def(py::init<sim::LatencyModel, std::string, std::uint16_t, std::string>(), py::arg("model"),
           py::arg("bind") = "127.0.0.1", py::arg("port") = 0,
           py::arg("answer_name") = "hotspot.local.")
      .def_property_readonly("address", &PySimulator::address)
      .def_property_readonly("port", &PySimulator::port)
      .def("counters", &PySimulator::counters)
      .def("stop", &PySimulator::stop)
      .def("__enter__", [](PySimulator& s) -> PySimulator& { return s; })
      .def("__exit__", [](PySimulator& s, py::args) { s.stop(); });

  // prober
  m.def(
      "run_campaign",
      [](const std::string& target, std::size_t runs, std::size_t queries, double gap_ms,
         double timeout_ms, ThermalState thermal, std::optional<std::uint64_t> seed,
         bool measure_overhead) {
        ProbeConfig cfg;
        cfg.target = net::Endpoint::parse(target);
        cfg.runs = runs;
        cfg.queries_per_run = queries;
        cfg.inter_query_gap_ms = gap_ms;
        cfg.timeout_ms = timeout_ms;
        cfg.thermal_state = thermal;
        cfg.id_seed = seed;
        cfg.measure_overhead = measure_overhead;
        Campaign c;
        {
          py::gil_scoped_release release;
          c = run_campaign(cfg);
        }
        py::list samples;
        for (const auto& s : c.samples)
          samples.append(py::make_tuple(s.run_index, s.query_index, s.rtt_ms,
                                        std::string(to_string(s.outcome))));
        py::dict d;
        d["samples"] = samples;
        d["loss_rate"] = c.loss_rate();
        d["tool_overhead_ms"] = c.tool_overhead_ms;
        d["partial"] = c.partial;
        d["abort_reason"] = c.abort_reason;
        d["csv"] = io::export_campaign_csv(c);
        return d;
      },
      py::arg("target"), py::arg("runs") = 3, py::arg("queries_per_run") = 100,
      py::arg("gap_ms") = 100.0, py::arg("timeout_ms") = 2000.0,
      py::arg("thermal_state") = ThermalState::unknown, py::arg("seed") = std::nullopt,
      py::arg("measure_overhead") = true);

  // service scan
  m.def(
      "scan_services",
      [](const std::string& target, const std::vector<std::string>& ports, double timeout_ms,
         std::uint16_t dns_port) {
        std::vector<PortSpec> specs;
        for (const auto& p : ports) specs.push_back(PortSpec::parse(p));
        if (ports.empty()) specs = default_scan_ports();
        ServiceReport r;
        {
          py::gil_scoped_release release;
          r = scan_services(net::Endpoint::parse(target, 0).address, specs, timeout_ms, dns_port);
        }
        py::dict states;
        for (const auto& p : r.probed_ports)
          states[py::str(std::to_string(p.spec.port) + "/" + std::string(to_string(p.spec.transport)))] =
              std::string(to_string(p.state));
        py::dict d;
        d["dns_functional"] = r.dns_functional;
        d["dns_rtt_hint_ms"] = r.dns_rtt_hint_ms;
        d["ports"] = states;
        return d;
      },
      py::arg("target"), py::arg("ports") = std::vector<std::string>{}, py::arg("timeout_ms") = 1000.0,
      py::arg("dns_port") = 53);

  // local detection
  m.def(
      "run_local_checks",
      [](const std::filesystem::path& fs_root) {
        local::ScanConfig cfg;
        cfg.fs_root = fs_root;
        auto report = local::run_local_checks(cfg);
        py::list checks;
        for (const auto& c : report.checks) {
          py::dict d;
          d["id"] = c.id;
          d["category"] = std::string(local::to_string(c.category));
          d["result"] = std::string(local::to_string(c.result));
          d["detail"] = c.detail;
          checks.append(d);
        }
        py::dict d;
        d["checks"] = checks;
        d["found_count"] = report.found_count;
        d["tendency"] = report.tendency;
        return d;
      },
      py::arg("fs_root") = std::filesystem::path("/"));
}
