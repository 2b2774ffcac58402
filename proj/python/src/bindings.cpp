#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "screenline/cli.hpp"
#include "screenline/detections_io.hpp"
#include "screenline/error.hpp"
#include "screenline/rng.hpp"
#include "screenline/synthetic.hpp"
#include "screenline/workflow.hpp"

namespace py = pybind11;
using namespace screenline;

namespace {

// JSON crosses the boundary as text; the Python package decodes it.
std::string dumps(const Json& j) { return j.dump(); }

std::span<const float> as_span(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

QueryFilter filter_from_json(const std::string& text) {
  const Json j = text.empty() ? Json::object() : Json::parse(text);
  QueryFilter f;
  if (j.contains("episode_id")) f.episode_id = j["episode_id"].get<std::string>();
  if (j.contains("series_id")) f.series_id = j["series_id"].get<std::string>();
  if (j.contains("season")) f.season = j["season"].get<int>();
  if (j.contains("celebrities")) {
    for (const auto& c : j["celebrities"]) f.celebrities.insert(c.get<std::string>());
  }
  if (j.contains("from_ms") || j.contains("to_ms")) {
    f.range = TimeRange{j.value("from_ms", std::int64_t{0}),
                        j.value("to_ms", std::numeric_limits<std::int64_t>::max())};
  }
  return f;
}

}  // namespace

PYBIND11_MODULE(_screenline, m) {
  m.doc() = "Native core of the screenline package";

  static py::exception<Error> error_type(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      auto type = py::reinterpret_borrow<py::object>(error_type);
      py::object exc = type(std::string(to_string(e.code())), std::string(e.what()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<KnownIdentityIndex>(m, "Index")
      .def_static(
          "build",
          [](std::vector<std::string> ids, py::array_t<float, py::array::c_style | py::array::forcecast> vectors,
             const std::string& metric) {
            if (vectors.ndim() != 2) throw py::value_error("vectors must be 2-D");
            return KnownIdentityIndex::build(std::move(ids), as_span(vectors), static_cast<std::size_t>(vectors.shape(1)),
                                             metric_from_string(metric));
          },
          py::arg("ids"), py::arg("vectors"), py::arg("metric") = "cosine")
      .def_static("load", &KnownIdentityIndex::load)
      .def("save", &KnownIdentityIndex::save)
      .def_property_readonly("dim", &KnownIdentityIndex::dim)
      .def_property_readonly("count", &KnownIdentityIndex::count)
      .def_property_readonly("metric", [](const KnownIdentityIndex& i) { return to_string(i.metric()); })
      .def_property_readonly("ids", &KnownIdentityIndex::ids)
      .def(
          "search",
          [](const KnownIdentityIndex& index, py::array_t<float, py::array::c_style | py::array::forcecast> query,
             std::size_t k) {
            std::vector<std::string> ids;
            std::vector<double> scores;
            {
              py::gil_scoped_release release;
              for (const auto& match : index.search_topk(as_span(query), k)) {
                ids.push_back(match.celebrity_id);
                scores.push_back(match.raw_score);
              }
            }
            return py::make_tuple(ids, scores);
          },
          py::arg("query"), py::arg("k") = 5);

  py::class_<Store>(m, "Store")
      .def(py::init([](const std::string& dir, std::optional<std::size_t> max_records) {
             StoreOptions o;
             if (max_records) o.max_records = *max_records;
             return std::make_unique<Store>(dir, o);
           }),
           py::arg("dir"), py::arg("max_records") = py::none())
      .def("register_episode", [](Store& s, const std::string& meta) { s.register_episode(meta_from_json(Json::parse(meta))); })
      .def("ingest",
           [](Store& s, const std::string& episode_id, const std::string& body) {
             return s.put_timeline(parse_ingest(s, episode_id, body));
           })
      .def("mark_processed", &Store::mark_processed)
      .def("episodes",
           [](const Store& s) {
             Json out = Json::array();
             for (const auto& e : s.episodes()) out.push_back(to_json(e));
             return dumps(out);
           })
      .def("unprocessed",
           [](const Store& s) {
             Json out = Json::array();
             for (const auto& e : s.list_unprocessed()) out.push_back(to_json(e));
             return dumps(out);
           })
      .def("query",
           [](const Store& s, const std::string& filter) {
             std::ostringstream out;
             write_jsonl(out, s.query_appearances(filter_from_json(filter)));
             return out.str();
           },
           py::arg("filter") = "")
      .def("aggregate",
           [](const Store& s, const std::string& statistic, const std::string& group_by, const std::string& filter,
              std::optional<std::pair<std::int64_t, std::int64_t>> coalesce) {
             AggregateRequest req{statistic_from_string(statistic), group_by_from_string(group_by),
                                  filter_from_json(filter), std::nullopt};
             if (coalesce) req.coalesce = CoalesceParams{coalesce->first, coalesce->second};
             std::map<std::string, std::int64_t> out;
             for (const auto& row : s.aggregate(req)) out[row.key] = row.value;
             return out;
           },
           py::arg("statistic"), py::arg("group_by"), py::arg("filter") = "", py::arg("coalesce") = py::none())
      .def_property_readonly("record_count", &Store::record_count);

  m.def(
      "chart",
      [](const Store& store, const std::string& type, std::optional<std::string> episode,
         std::optional<std::string> series, std::vector<int> seasons, const std::map<std::string, std::int64_t>& params) {
        const auto chart_type = chart_type_from_string(type);
        if (!chart_type) throw Error(ErrorCode::InvalidArgument, "unknown chart type '" + type + "'");
        ChartRequest req;
        req.chart_type = *chart_type;
        req.episode_id = std::move(episode);
        req.series_id = std::move(series);
        req.seasons = std::move(seasons);
        auto get = [&](const char* name, std::int64_t& slot) {
          if (auto it = params.find(name); it != params.end()) slot = it->second;
        };
        get("bucket_ms", req.window.bucket_ms);
        get("window_ms", req.window.coappearance_window_ms);
        get("segment_ms", req.window.segment_ms);
        get("min_edge_weight", req.window.min_edge_weight);
        get("gap_ms", req.coalesce.gap_ms);
        get("tail_ms", req.coalesce.tail_ms);
        for (const auto& [k, v] : params) {
          static const std::set<std::string> known{"bucket_ms", "window_ms", "segment_ms",
                                                   "min_edge_weight", "gap_ms", "tail_ms"};
          if (!known.contains(k)) throw Error(ErrorCode::InvalidArgument, "unknown chart parameter '" + k + "'");
        }
        return chart_payload(get_chart(store, req));
      },
      py::arg("store"), py::arg("chart_type"), py::arg("episode") = py::none(), py::arg("series") = py::none(),
      py::arg("seasons") = std::vector<int>{}, py::arg("params") = std::map<std::string, std::int64_t>{});

  m.def("chart_types", [] {
    std::vector<std::string> out;
    for (auto t : all_chart_types()) out.push_back(to_string(t));
    return out;
  });

  m.def(
      "process_episode",
      [](Store& store, const std::string& episode_id, const KnownIdentityIndex& index, std::size_t workers,
         double threshold, std::size_t k, std::optional<std::string> detections) {
        RunOptions o;
        o.n_workers = workers;
        o.threshold = threshold;
        o.k = k;
        py::gil_scoped_release release;
        const auto result = process_episode(store, episode_id, index, o, detections);
        Json out = result.report.to_json();
        out["stored"] = result.stored;
        return dumps(out);
      },
      py::arg("store"), py::arg("episode_id"), py::arg("index"), py::arg("workers") = 1, py::arg("threshold") = 0.5,
      py::arg("k") = 5, py::arg("detections") = py::none());

  m.def(
      "synth_gallery",
      [](std::uint64_t seed, std::size_t n, std::size_t dim, const std::string& metric) {
        return synth::gen_gallery(seed, n, dim).to_index(metric_from_string(metric));
      },
      py::arg("seed"), py::arg("n_identities"), py::arg("dim") = 512, py::arg("metric") = "cosine");

  m.def(
      "synth_detections",
      [](const std::string& path, std::uint64_t gallery_seed, std::size_t n, std::size_t dim, std::uint64_t seed,
         std::int64_t duration_ms, double fps, double sigma, std::int64_t scene_ms, double cast) {
        const auto gallery = synth::gen_gallery(gallery_seed, n, dim);
        const auto schedule = synth::gen_schedule(seed, gallery, duration_ms, scene_ms, cast);
        const auto events = synth::emit_detections(schedule, gallery, fps, sigma, derive_seed(seed, 1));
        write_detections(path, frames_from_events(events));
        return synth::expected_counts(schedule, fps);
      },
      py::arg("path"), py::arg("gallery_seed"), py::arg("n_identities"), py::arg("dim"), py::arg("seed"),
      py::arg("duration_ms"), py::arg("fps") = 3.0, py::arg("sigma") = 0.1, py::arg("scene_ms") = 20000,
      py::arg("cast") = 2.0);

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "screenline");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
