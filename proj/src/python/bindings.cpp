// Python extension: frame codec, catalog, simulation, replay and coverage.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "udsmon/catalog.hpp"
#include "udsmon/coverage.hpp"
#include "udsmon/detection.hpp"
#include "udsmon/error.hpp"
#include "udsmon/sensing.hpp"
#include "udsmon/simulator.hpp"

namespace py = pybind11;
using namespace udsmon;

namespace {

Bytes to_bytes(const py::bytes &b) {
    std::string s = b;
    return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes &b) { return py::bytes(reinterpret_cast<const char *>(b.data()), b.size()); }

py::dict request_dict(const UdsRequest &r) {
    py::dict d;
    d["sid"] = r.sid;
    d["subfunction"] = r.subfunction ? py::cast(*r.subfunction) : py::none();
    d["payload"] = from_bytes(r.payload);
    d["unknown_service"] = r.unknown_service();
    return d;
}

py::dict response_dict(const UdsResponse &r) {
    py::dict d;
    d["sid"] = r.sid;
    d["positive"] = r.positive();
    d["nrc"] = r.nrc ? py::cast(*r.nrc) : py::none();
    d["payload"] = from_bytes(r.payload);
    return d;
}

py::list catalog_list() {
    py::list out;
    for (const auto &t : catalog()) {
        py::dict d;
        d["id"] = t.id;
        d["name"] = t.name;
        d["tactic"] = t.tactic();
        d["sids"] = t.sids_cell;
        d["logging"] = t.logging_cell;
        d["autosar"] = std::string(to_string(t.autosar));
        d["detection"] = t.detection_cell;
        out.append(d);
    }
    return out;
}

py::dict stats_dict() {
    auto s = catalog_stats(catalog());
    py::dict d;
    d["techniques"] = s.techniques;
    d["ar_full"] = s.ar_full;
    d["ar_partial"] = s.ar_partial;
    d["detectable"] = s.detectable;
    d["context_sids"] = s.context_sids;
    d["ar_context_sids"] = s.ar_context_sids;
    d["ratio_lower"] = s.ratio_lower();
    d["ratio_upper"] = s.ratio_upper();
    d["ratio_derived"] = s.ratio_derived();
    return d;
}

std::string replay(const std::string &trace_path, const std::optional<std::string> &store_path,
                   const std::optional<std::string> &topology_path, const std::optional<std::string> &ti_path,
                   const std::optional<std::string> &policy_path, const std::optional<std::string> &rules_path) {
    auto policy = policy_path ? load_policy(*policy_path) : LoggingPolicy::defaults();
    auto rules = rules_path ? load_rules(*rules_path) : default_rules();
    std::optional<ContextStore> store;
    if (store_path) store = load_store(*store_path);
    auto topology = topology_path ? load_topology(*topology_path) : reference_topology();
    std::vector<ThreatIntelItem> ti;
    if (ti_path) ti = load_ti_feed(*ti_path);
    auto trace = load_trace(trace_path);
    if (store && policy.sensitive.empty()) policy.sensitive = store->sensitive();
    const ContextStore *ctx = store ? &*store : nullptr;
    auto events = sense_trace(policy, topology, ctx, trace);
    return format_report_json(run_pipeline(rules, events, ctx, ti));
}

} // namespace

PYBIND11_MODULE(_udsmon, m) {
    m.doc() = "UDS security event logging and detection";

    auto base = py::register_exception<Error>(m, "UdsmonError");
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<MalformedFrame>(m, "MalformedFrame", base.ptr());
    py::register_exception<NotAResponse>(m, "NotAResponse", base.ptr());
    py::register_exception<LookupError>(m, "UnknownTechnique", base.ptr());
    py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());

    m.def("parse_request", [](const py::bytes &b) { return request_dict(parse_request(to_bytes(b))); },
          py::arg("frame"));
    m.def("parse_response", [](const py::bytes &b) { return response_dict(parse_response(to_bytes(b))); },
          py::arg("frame"));
    m.def("roundtrip_request", [](const py::bytes &b) { return from_bytes(encode_request(parse_request(to_bytes(b)))); },
          py::arg("frame"));
    m.def("roundtrip_response",
          [](const py::bytes &b) { return from_bytes(encode_response(parse_response(to_bytes(b)))); },
          py::arg("frame"));
    m.def("catalog", &catalog_list);
    m.def("stats", &stats_dict);
    m.def("stats_text", [] { return format_stats_text(catalog_stats(catalog())); });
    m.def(
        "simulate",
        [](const std::string &technique, std::uint64_t seed, const std::string &out_dir) {
            save_scenario(out_dir, technique == "benign" ? benign_traffic(seed) : simulate(technique, seed));
        },
        py::arg("technique"), py::arg("seed"), py::arg("out_dir"));
    m.def("replay_json", &replay, py::arg("trace"), py::arg("store") = py::none(), py::arg("topology") = py::none(),
          py::arg("ti") = py::none(), py::arg("policy") = py::none(), py::arg("rules") = py::none());
    m.def(
        "coverage_json",
        [](std::uint64_t seed) {
            return format_coverage_json(run_coverage(seed, LoggingPolicy::defaults(), default_rules()));
        },
        py::arg("seed") = 1);
}
