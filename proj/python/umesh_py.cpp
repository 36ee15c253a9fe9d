#include "umesh/scenario.hpp"
#include "umesh/wire.hpp"

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace umesh;

namespace {

Bytes to_bytes(const py::bytes& b) {
  const std::string_view s = b;
  return Bytes(s.begin(), s.end());
}

py::bytes to_py(const Bytes& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

}  // namespace

PYBIND11_MODULE(umesh, m) {
  m.doc() = "UDP mesh protocol: wire codec, fragment planning and the simulator";

  py::register_exception<simnet::InvalidScenario>(m, "InvalidScenario", PyExc_ValueError);

  py::enum_<wire::Kind>(m, "Kind")
      .value("Heartbeat", wire::Kind::Heartbeat)
      .value("Data", wire::Kind::Data)
      .value("Ack", wire::Kind::Ack)
      .value("BcastData", wire::Kind::BcastData);

  py::class_<wire::Envelope>(m, "Envelope")
      .def(py::init<>())
      .def_readwrite("kind", &wire::Envelope::kind)
      .def_readwrite("source_id", &wire::Envelope::source_id)
      .def_readwrite("dest_id", &wire::Envelope::dest_id)
      .def_readwrite("message_id", &wire::Envelope::message_id)
      .def_readwrite("frag_index", &wire::Envelope::frag_index)
      .def_readwrite("frag_count", &wire::Envelope::frag_count)
      .def_readwrite("priority", &wire::Envelope::priority)
      .def_readwrite("topic", &wire::Envelope::topic)
      .def_property(
          "payload", [](const wire::Envelope& e) { return to_py(e.payload); },
          [](wire::Envelope& e, const py::bytes& b) { e.payload = to_bytes(b); })
      .def(py::self == py::self);

  m.def("encode", [](const wire::Envelope& env) {
    auto r = wire::encode_envelope(env);
    if (auto* err = std::get_if<wire::EncodeError>(&r)) throw py::value_error(wire::to_string(*err));
    return to_py(std::get<Bytes>(r));
  });
  m.def("decode", [](const py::bytes& b) {
    const Bytes raw = to_bytes(b);
    auto r = wire::decode_envelope(raw);
    if (auto* err = std::get_if<wire::DecodeError>(&r)) throw py::value_error(wire::to_string(*err));
    return std::get<wire::Envelope>(std::move(r));
  });
  m.def("node_id", &node_id_for);

  m.def(
      "plan_fragments",
      [](std::size_t payload_len, std::size_t topic_len) {
        if (topic_len > wire::kMaxTopicLen) throw py::value_error("topic_len exceeds 64");
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (const auto& r : wire::plan_fragments(payload_len, topic_len).ranges) out.emplace_back(r.offset, r.length);
        return out;
      },
      py::arg("payload_len"), py::arg("topic_len"));
  m.def("first_fragment_capacity", &wire::first_fragment_capacity);

  m.def(
      "run_scenario",
      [](const std::filesystem::path& path, std::optional<std::uint64_t> seed) {
        const auto stats = simnet::run_scenario(simnet::load_scenario(path), seed);
        py::dict out;
        out["summary"] = stats.summary();
        out["csv"] = stats.csv_files();
        return out;
      },
      py::arg("path"), py::arg("seed") = py::none());
}
