#include "screenline/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "screenline/detections_io.hpp"
#include "screenline/error.hpp"
#include "screenline/rng.hpp"
#include "screenline/service.hpp"
#include "screenline/store.hpp"
#include "screenline/synthetic.hpp"
#include "screenline/workflow.hpp"

namespace screenline::cli {

namespace fs = std::filesystem;

namespace {

struct ProcessFlags {
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::size_t detect_batch = 64;
  std::size_t embed_batch = 128;
  std::string metric;
  double threshold = 0.5;
  std::size_t k = 5;

  RunOptions options() const {
    RunOptions o;
    o.n_workers = workers;
    o.batch = {detect_batch, embed_batch};
    o.threshold = threshold;
    o.k = k;
    return o;
  }

  void add(CLI::App* app) {
    app->add_option("--workers", workers, "Worker count")->check(CLI::PositiveNumber);
    app->add_option("--detect-batch", detect_batch, "Frames per detection batch")->check(CLI::PositiveNumber);
    app->add_option("--embed-batch", embed_batch, "Faces per embedding batch")->check(CLI::PositiveNumber);
    app->add_option("--metric", metric, "Override the gallery metric")->check(CLI::IsMember({"cosine", "l2"}));
    app->add_option("--threshold", threshold, "Acceptance threshold for the top match");
    app->add_option("--k", k, "Matches retrieved per embedding")->check(CLI::PositiveNumber);
  }
};

struct ChartFlags {
  WindowParams window;
  CoalesceParams coalesce;

  void add(CLI::App* app) {
    app->add_option("--bucket-ms", window.bucket_ms, "Time bucket for per-minute, trend and area charts");
    app->add_option("--window-ms", window.coappearance_window_ms, "Co-appearance window");
    app->add_option("--segment-ms", window.segment_ms, "Heatmap segment length");
    app->add_option("--min-edge-weight", window.min_edge_weight, "Smallest network edge kept");
    app->add_option("--gap-ms", coalesce.gap_ms, "Largest gap joined into one interval");
    app->add_option("--tail-ms", coalesce.tail_ms, "Presence credited after the last detection");
  }
};

KnownIdentityIndex load_gallery(const std::string& path, const std::string& metric) {
  KnownIdentityIndex index = load_index(path);
  if (!metric.empty() && metric_from_string(metric) != index.metric()) {
    index = KnownIdentityIndex::build(index.ids(), index.vectors(), index.dim(), metric_from_string(metric));
  }
  return index;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot write " + path);
  f << text;
  if (!f) fail(ErrorCode::IoError, "short write to " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Celebrity screen-time timelines and analytics", "screenline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read key=value defaults from a file");

  std::string data_dir = "screenline-data";
  app.add_option("--data-dir", data_dir, "Store directory")->envname("SCREENLINE_DATA_DIR");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic episode, its gallery and detections");
  std::string out_dir;
  std::string episode_id = "demo";
  std::string series_id = "demo-series";
  int season = 1;
  int episode_number = 1;
  std::uint64_t seed = 42;
  std::uint64_t gallery_seed = 7;
  std::size_t identities = 8;
  std::size_t dim = 512;
  std::int64_t duration_ms = 1800000;
  double fps = 2.0;
  double sigma = 0.1;
  std::int64_t scene_ms = 120000;
  double cast = 2.5;
  std::string synth_metric = "cosine";
  bool no_register = false;
  synth_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  synth_cmd->add_option("--episode", episode_id, "Episode id");
  synth_cmd->add_option("--series", series_id, "Series id");
  synth_cmd->add_option("--season", season, "Season number")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--episode-number", episode_number, "Episode number")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", seed, "Schedule and noise seed");
  synth_cmd->add_option("--gallery-seed", gallery_seed, "Gallery seed (shared across episodes)");
  synth_cmd->add_option("--identities", identities, "Gallery size")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dim", dim, "Embedding dimension");
  synth_cmd->add_option("--duration-ms", duration_ms, "Episode duration");
  synth_cmd->add_option("--fps", fps, "Sampling rate");
  synth_cmd->add_option("--sigma", sigma, "Embedding noise norm");
  synth_cmd->add_option("--scene-ms", scene_ms, "Mean scene length");
  synth_cmd->add_option("--cast", cast, "Mean cast per scene");
  synth_cmd->add_option("--metric", synth_metric, "Gallery metric")->check(CLI::IsMember({"cosine", "l2"}));
  synth_cmd->add_flag("--no-register", no_register, "Do not register the episode in the store");

  // process
  auto* process_cmd = app.add_subcommand("process", "Run the pipeline and store timelines");
  std::string process_episode_id;
  std::string detections_path;
  std::string index_path;
  std::int64_t process_duration = 0;
  ProcessFlags pflags;
  process_cmd->add_option("--episode", process_episode_id, "Episode to process (default: all unprocessed)");
  process_cmd->add_option("--detections", detections_path, "Detection stream (overrides the registered one)");
  process_cmd->add_option("--index", index_path, "Gallery index file")->required();
  process_cmd->add_option("--duration-ms", process_duration, "Registers an unknown episode with this duration");
  pflags.add(process_cmd);

  // query
  auto* query_cmd = app.add_subcommand("query", "Print matching appearance records as JSON Lines");
  QueryFilter filter;
  std::string q_episode, q_series;
  int q_season = 0;
  std::vector<std::string> q_celebs;
  std::int64_t from_ms = -1, to_ms = -1;
  query_cmd->add_option("--episode", q_episode, "Episode id");
  query_cmd->add_option("--series", q_series, "Series id");
  query_cmd->add_option("--season", q_season, "Season number");
  query_cmd->add_option("--celebrity", q_celebs, "Celebrity id (repeatable)")->delimiter(',');
  query_cmd->add_option("--from-ms", from_ms, "Range start (inclusive)");
  query_cmd->add_option("--to-ms", to_ms, "Range end (exclusive)");

  // chart
  auto* chart_cmd = app.add_subcommand("chart", "Print a chart as JSON");
  std::string chart_name;
  std::string c_episode, c_series, chart_out;
  std::vector<int> c_seasons;
  ChartFlags cflags;
  std::string type_names;
  for (const auto t : all_chart_types()) type_names += (type_names.empty() ? "" : ", ") + std::string(to_string(t));
  chart_cmd->add_option("chart_type", chart_name, "One of: " + type_names)->required();
  chart_cmd->add_option("--episode", c_episode, "Episode scope");
  chart_cmd->add_option("--series", c_series, "Series scope (seasonal_comparison)");
  chart_cmd->add_option("--seasons", c_seasons, "Seasons to compare")->delimiter(',');
  chart_cmd->add_option("--out", chart_out, "Write to this file instead of stdout");
  cflags.add(chart_cmd);

  // export
  auto* export_cmd = app.add_subcommand("export", "Export an episode timeline");
  std::string e_episode, e_out_dir;
  CoalesceParams e_params;
  export_cmd->add_option("--episode", e_episode, "Episode id")->required();
  export_cmd->add_option("--out-dir", e_out_dir, "Write <id>.jsonl and <id>.meta.json here");
  export_cmd->add_option("--gap-ms", e_params.gap_ms, "Coalesce gap echoed in the sidecar");
  export_cmd->add_option("--tail-ms", e_params.tail_ms, "Coalesce tail echoed in the sidecar");

  // import
  auto* import_cmd = app.add_subcommand("import", "Store records from a JSON Lines file");
  std::string i_episode, i_file, i_meta;
  import_cmd->add_option("--episode", i_episode, "Episode id")->required();
  import_cmd->add_option("--file", i_file, "JSON Lines records")->required();
  import_cmd->add_option("--meta", i_meta, "Episode meta JSON (needed for unregistered episodes)");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string serve_index;
  std::string static_dir;
  std::size_t max_body = 64 * 1024 * 1024;
  ProcessFlags sflags;
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port (0 picks one)");
  serve_cmd->add_option("--index", serve_index, "Gallery index for POST /episodes/{id}/process");
  serve_cmd->add_option("--static-dir", static_dir, "Dashboard bundle served under /ui");
  serve_cmd->add_option("--max-body-bytes", max_body, "Ingest size cap");
  sflags.add(serve_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth_cmd->parsed()) {
      fs::create_directories(out_dir);
      const auto gallery = synth::gen_gallery(gallery_seed, identities, dim);
      const auto schedule = synth::gen_schedule(seed, gallery, duration_ms, scene_ms, cast);
      const auto events = synth::emit_detections(schedule, gallery, fps, sigma, derive_seed(seed, 1));
      const auto frames = frames_from_events(events);

      const std::string gallery_path = (fs::path(out_dir) / "gallery.keix").string();
      const std::string dets_path = fs::absolute(fs::path(out_dir) / (episode_id + ".dets")).string();
      const std::string schedule_path = (fs::path(out_dir) / (episode_id + ".schedule.json")).string();
      gallery.to_index(metric_from_string(synth_metric)).save(gallery_path);
      write_detections(dets_path, frames);
      Json truth = synth::schedule_to_json(schedule);
      truth["fps"] = fps;
      truth["expected_counts"] = synth::expected_counts(schedule, fps);
      write_text(schedule_path, truth.dump(2) + "\n");

      EpisodeMeta meta{episode_id, series_id, season, episode_number, duration_ms, false, dets_path};
      if (!no_register) Store(data_dir).register_episode(meta);
      Json summary;
      summary["episode_id"] = episode_id;
      summary["gallery"] = gallery_path;
      summary["detections"] = dets_path;
      summary["schedule"] = schedule_path;
      summary["events"] = events.size();
      summary["frames"] = frames.size();
      summary["registered"] = !no_register;
      out << summary.dump() << "\n";
      return kOk;
    }

    if (process_cmd->parsed()) {
      Store store(data_dir);
      const KnownIdentityIndex index = load_gallery(index_path, pflags.metric);
      std::vector<std::string> targets;
      if (!process_episode_id.empty()) {
        if (!store.episode(process_episode_id)) {
          if (process_duration <= 0 || detections_path.empty()) {
            fail(ErrorCode::UnknownEpisode,
                 "unknown episode '" + process_episode_id + "' (pass --detections and --duration-ms to register it)");
          }
          EpisodeMeta meta;
          meta.episode_id = process_episode_id;
          meta.duration_ms = process_duration;
          meta.source = fs::absolute(detections_path).string();
          store.register_episode(meta);
        }
        targets.push_back(process_episode_id);
      } else {
        for (const auto& m : store.list_unprocessed()) {
          if (!m.source.empty()) targets.push_back(m.episode_id);
        }
      }
      std::optional<std::string> override_path;
      if (!detections_path.empty()) override_path = detections_path;
      for (const auto& id : targets) {
        const ProcessResult result = process_episode(store, id, index, pflags.options(), override_path);
        Json report = result.report.to_json();
        report["stored"] = result.stored;
        out << report.dump() << "\n";
      }
      return kOk;
    }

    if (query_cmd->parsed()) {
      if (!q_episode.empty()) filter.episode_id = q_episode;
      if (!q_series.empty()) filter.series_id = q_series;
      if (q_season > 0) filter.season = q_season;
      filter.celebrities.insert(q_celebs.begin(), q_celebs.end());
      if (from_ms >= 0 || to_ms >= 0) {
        filter.range = TimeRange{std::max<std::int64_t>(from_ms, 0),
                                 to_ms >= 0 ? to_ms : std::numeric_limits<std::int64_t>::max()};
      }
      Store store(data_dir);
      write_jsonl(out, store.query_appearances(filter));
      return kOk;
    }

    if (chart_cmd->parsed()) {
      const auto type = chart_type_from_string(chart_name);
      if (!type) {
        err << "unknown chart type '" << chart_name << "'\n" << chart_cmd->help();
        return kUsage;
      }
      ChartRequest req;
      req.chart_type = *type;
      if (!c_episode.empty()) req.episode_id = c_episode;
      if (!c_series.empty()) req.series_id = c_series;
      req.seasons = c_seasons;
      req.window = cflags.window;
      req.coalesce = cflags.coalesce;
      Store store(data_dir);
      const std::string payload = chart_payload(get_chart(store, req));
      if (chart_out.empty()) {
        out << payload;
      } else {
        write_text(chart_out, payload);
      }
      return kOk;
    }

    if (export_cmd->parsed()) {
      Store store(data_dir);
      const auto timeline = store.timeline(e_episode);
      if (e_out_dir.empty()) {
        export_timeline(*timeline, out);
      } else {
        fs::create_directories(e_out_dir);
        std::ostringstream body;
        export_timeline(*timeline, body);
        write_text((fs::path(e_out_dir) / (e_episode + ".jsonl")).string(), body.str());
        write_text((fs::path(e_out_dir) / (e_episode + ".meta.json")).string(),
                   timeline_sidecar(*timeline, e_params).dump(2) + "\n");
      }
      return kOk;
    }

    if (import_cmd->parsed()) {
      Store store(data_dir);
      std::string body;
      if (!i_meta.empty()) body = Json{{"meta", Json::parse(read_text(i_meta))}}.dump() + "\n";
      body += read_text(i_file);
      const std::size_t stored = store.put_timeline(parse_ingest(store, i_episode, body));
      out << Json{{"episode_id", i_episode}, {"stored", stored}}.dump() << "\n";
      return kOk;
    }

    if (serve_cmd->parsed()) {
      Store store(data_dir);
      ServiceConfig config;
      config.index_path = serve_index;
      config.static_dir = static_dir;
      config.max_body_bytes = max_body;
      config.run = sflags.options();
      Service service(store, config);
      const int bound = service.bind(host, port);
      err << "listening on http://" << host << ":" << bound << "\n";
      service.listen();
      return kOk;
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kDataError;
  } catch (const Json::exception& e) {
    err << "error [ParseError]: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace screenline::cli
