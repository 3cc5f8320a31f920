#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "imes/sim_harness.hpp"

namespace py = pybind11;
using namespace imes;

namespace {

std::vector<double> period_values(const SimRun& r, double PeriodResult::*field) {
  std::vector<double> v;
  for (const auto& p : r.periods) v.push_back(p.*field);
  return v;
}

SimOptions options_for(bool perfect_forecast) {
  SimOptions o;
  if (perfect_forecast) o.forecast = ForecastBounds::perfect();
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transactive control simulation core";

  py::enum_<Mode>(m, "Mode").value("NCA", Mode::NCA).value("CA", Mode::CA).value("CAFIL", Mode::CAFIL);
  py::enum_<Protocol>(m, "Protocol").value("SGRTC", Protocol::SGRTC).value("TwoStage", Protocol::TwoStage);

  py::register_exception<MesError>(m, "MesError", PyExc_RuntimeError);
  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("id", &Scenario::id)
      .def_property_readonly("mes_count", [](const Scenario& s) { return s.mes.size(); })
      .def_property_readonly("transformer_import_max", [](const Scenario& s) { return s.grid.transformer_import_max; })
      .def_property_readonly("transformer_export_max", [](const Scenario& s) { return s.grid.transformer_export_max; })
      .def_property_readonly("rtp_price", [](const Scenario& s) { return s.grid.rtp_price; })
      .def_property_readonly("shared_res", [](const Scenario& s) { return s.grid.shared_res; });

  py::class_<SimRun>(m, "SimRun")
      .def_readonly("total_cost", &SimRun::total_cost)
      .def_readonly("cost_rtp", &SimRun::cost_rtp)
      .def_readonly("violations", &SimRun::violations)
      .def_readonly("day_ahead_prices", &SimRun::day_ahead_prices)
      .def_readonly("wall_clock_seconds", &SimRun::wall_clock_seconds)
      .def_property_readonly("accommodation", &SimRun::accommodation)
      .def_property_readonly("transformer", [](const SimRun& r) { return period_values(r, &PeriodResult::transformer); })
      .def_property_readonly("lambda_e",
                             [](const SimRun& r) {
                               std::vector<double> v;
                               for (const auto& p : r.periods) v.push_back(p.record.lambda_e);
                               return v;
                             })
      .def_property_readonly("iterations",
                             [](const SimRun& r) {
                               std::vector<int> v;
                               for (const auto& p : r.periods) v.push_back(p.record.iterations);
                               return v;
                             })
      .def_property_readonly("messages", [](const SimRun& r) { return r.messages.total(); })
      .def("clearing_csv",
           [](const SimRun& r) {
             std::ostringstream out;
             write_clearing_csv(r, out);
             return out.str();
           })
      .def("write", [](const SimRun& r, const std::filesystem::path& dir) { write_run(r, dir); }, py::arg("dir"));

  m.def("random_case", [](int n, std::uint64_t seed) { return random_case(n, seed); }, py::arg("n_mes"),
        py::arg("seed"));
  m.def("case_two", &case_two);
  m.def("read_scenario", &read_scenario, py::arg("dir"));
  m.def("write_scenario", &write_scenario, py::arg("scenario"), py::arg("dir"));
  m.def(
      "run_day",
      [](const Scenario& s, Mode mode, Protocol protocol, std::uint64_t seed, bool perfect_forecast) {
        py::gil_scoped_release release;
        return run_day(s, mode, protocol, seed, options_for(perfect_forecast));
      },
      py::arg("scenario"), py::arg("mode"), py::arg("protocol") = Protocol::TwoStage, py::arg("seed") = 0,
      py::arg("perfect_forecast") = false);
  m.def(
      "compare_protocols",
      [](const Scenario& s, std::uint64_t seed) {
        ProtocolComparison c;
        {
          py::gil_scoped_release release;
          c = compare_protocols(s, seed);
        }
        py::dict d;
        d["sg_rtc_cost"] = c.sg_rtc.total_cost;
        d["two_stage_cost"] = c.two_stage.total_cost;
        d["gap"] = c.gap;
        d["sg_max_iterations"] = c.sg_stats.max;
        d["sg_avg_iterations"] = c.sg_stats.avg;
        d["two_stage_max_iterations"] = c.ts_stats.max;
        d["two_stage_avg_iterations"] = c.ts_stats.avg;
        return d;
      },
      py::arg("scenario"), py::arg("seed") = 0);
  m.def("bisection_iteration_cap", []() { return bisection_iteration_cap(CoordinatorConfig{}); });
}
