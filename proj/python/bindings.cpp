#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "opcrecipe/config.hpp"
#include "opcrecipe/error.hpp"
#include "opcrecipe/features.hpp"
#include "opcrecipe/layout_io.hpp"
#include "opcrecipe/metrics.hpp"
#include "opcrecipe/opc.hpp"
#include "opcrecipe/pipeline.hpp"
#include "opcrecipe/recipes.hpp"
#include "opcrecipe/synth.hpp"

namespace py = pybind11;
using namespace opcrecipe;

namespace {

using Ring = std::vector<std::pair<int, int>>;

std::vector<Ring> rings_of(const std::vector<Polygon>& polys) {
    std::vector<Ring> out;
    for (const Polygon& p : polys) {
        Ring r;
        for (const Point& v : p.vertices) r.emplace_back(v.x, v.y);
        out.push_back(std::move(r));
    }
    return out;
}

py::dict evaluation_dict(const Evaluation& e) {
    py::dict d;
    d["epe_n"] = e.epe.epe_n;
    d["epe_d"] = e.epe.epe_d;
    d["pvb"] = e.pvb.value;
    d["l2"] = e.loss.l2;
    d["loss"] = e.loss.total;
    return d;
}

// Baseline OPC on one clip under a run configuration.
py::dict opc_clip(const LayoutClip& clip, const std::string& config_json) {
    const RunConfig cfg = config_json.empty() ? desk_config() : config_from_json(config_json);
    OpcResult r;
    {
        py::gil_scoped_release release;
        r = run_opc(clip, cfg.litho, cfg.opc, cfg.metrics, place_control_points(clip, cfg.opc.fragment_policy));
    }
    py::dict d = evaluation_dict(r.final);
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    d["mask"] = rings_of(r.mask);
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "OPC recipe development pipeline";
    m.attr("__version__") = kVersion;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", validation.ptr());
    py::register_exception<ParseError>(m, "ParseError", validation.ptr());
    py::register_exception<RecipeError>(m, "RecipeError", validation.ptr());
    py::register_exception<MissingArtifactError>(m, "MissingArtifactError", validation.ptr());

    py::class_<LayoutClip>(m, "LayoutClip")
        .def_readonly("id", &LayoutClip::id)
        .def_readonly("width_nm", &LayoutClip::width_nm)
        .def_readonly("height_nm", &LayoutClip::height_nm)
        .def_property_readonly("polygons", [](const LayoutClip& c) { return rings_of(c.polygons); })
        .def("__repr__", [](const LayoutClip& c) {
            return "<LayoutClip " + c.id + " " + std::to_string(c.polygons.size()) + " polygons>";
        });

    m.def("parse_layout", &parse_layout, py::arg("text"));
    m.def("format_layout", &format_layout, py::arg("clip"));
    m.def(
        "synth_suite",
        [](std::uint64_t seed, int count, const std::string& config_json) {
            const RunConfig cfg = config_json.empty() ? desk_config() : config_from_json(config_json);
            return synth_suite(seed, count, cfg.suite.synth);
        },
        py::arg("seed"), py::arg("count"), py::arg("config_json") = "");

    m.def("desk_config_json", [] { return config_to_json(desk_config()); });
    m.def(
        "merge_config",
        [](const std::string& base_json, const std::string& overrides) {
            return config_to_json(merge_config(config_from_json(base_json), overrides));
        },
        py::arg("config_json"), py::arg("overrides_json"));
    m.def(
        "config_hash", [](const std::string& j) { return config_hash(config_from_json(j)); },
        py::arg("config_json"));

    m.def("run_opc", &opc_clip, py::arg("clip"), py::arg("config_json") = "",
          "Baseline OPC; returns metrics, iterations and the corrected mask.");

    m.def(
        "label_clip",
        [](const LayoutClip& clip) {
            const auto layout = place_control_points(clip, FragmentPolicy{});
            std::vector<py::dict> out;
            for (const auto& p : layout.points) {
                const auto v = label_point(clip, layout, p, builtin_pool());
                py::dict d;
                d["epe_id"] = v.point_id;
                d["kind"] = to_string(v.kind);
                d["types"] = v.type_tag;
                for (const auto& [name, value] : v.values) d[py::str(name)] = value;
                out.push_back(d);
            }
            return out;
        },
        py::arg("clip"), "Geometric feature labels for every control point.");

    m.def(
        "ratio_table",
        [](const std::vector<std::pair<std::string, std::vector<std::pair<std::string, double>>>>& variants) {
            if (variants.empty()) throw ValidationError("ratio_table needs a baseline");
            const VariantSummary b{variants[0].first, variants[0].second};
            std::vector<VariantSummary> rest;
            std::vector<std::string> names{variants[0].first};
            for (std::size_t i = 1; i < variants.size(); ++i) {
                rest.push_back({variants[i].first, variants[i].second});
                names.push_back(variants[i].first);
            }
            return ratio_table_csv(names, ratio_table(b, rest));
        },
        py::arg("variants"), "Table-style CSV from [(name, [(metric, value), ...]), ...], baseline first.");

    m.def(
        "recipe_downstream",
        [](const std::string& jsonl, int C) {
            return emit_downstream(parse_jsonl(jsonl), default_naming(builtin_pool()), C);
        },
        py::arg("recipe_jsonl"), py::arg("C") = 4);

    py::class_<Pipeline>(m, "Pipeline")
        .def(py::init([](const std::string& run_dir, const std::string& config_json) {
                 return Pipeline(config_json.empty() ? desk_config() : config_from_json(config_json), run_dir);
             }),
             py::arg("run_dir"), py::arg("config_json") = "")
        .def_property_readonly("dir", &Pipeline::dir)
        .def("gen", &Pipeline::gen, py::call_guard<py::gil_scoped_release>())
        .def("ingest", &Pipeline::ingest, py::arg("files"), py::call_guard<py::gil_scoped_release>())
        .def("opc", &Pipeline::opc, py::call_guard<py::gil_scoped_release>())
        .def("rl_train", &Pipeline::rl_train, py::call_guard<py::gil_scoped_release>())
        .def("annotate", &Pipeline::annotate, py::call_guard<py::gil_scoped_release>())
        .def("tree", &Pipeline::tree, py::call_guard<py::gil_scoped_release>())
        .def("emit", &Pipeline::emit, py::call_guard<py::gil_scoped_release>())
        .def("apply", &Pipeline::apply, py::arg("variant"), py::call_guard<py::gil_scoped_release>())
        .def("report", &Pipeline::report, py::call_guard<py::gil_scoped_release>())
        .def("svg", &Pipeline::svg, py::call_guard<py::gil_scoped_release>())
        .def("all", &Pipeline::all, py::call_guard<py::gil_scoped_release>());
}
