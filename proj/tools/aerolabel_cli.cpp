#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>

#include "CLI11.hpp"

#include "aerolabel/overlay.hpp"
#include "aerolabel/png_io.hpp"
#include "aerolabel/segmentation.hpp"
#include "aerolabel/service.hpp"
#include "aerolabel/stats.hpp"
#include "aerolabel/store.hpp"

namespace {

aerolabel::HttpService* g_service = nullptr;

void handle_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace aerolabel;
  CLI::App app{"Aerial image labeling workbench"};
  app.require_subcommand(1);

  ServiceConfig config;
  std::string log_level = "info";
  std::string web_root;
  int overlay_alpha = config.overlay_alpha;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", config.host, "Listen address")->envname("AEROLABEL_HOST");
  serve->add_option("--port", config.port, "Listen port (0 = ephemeral)")->envname("AEROLABEL_PORT");
  serve->add_option("--data-root", config.data_root, "Project storage directory")
      ->envname("AEROLABEL_DATA_ROOT");
  serve->add_option("--web-root", web_root, "Static frontend assets served at /")
      ->envname("AEROLABEL_WEB_ROOT");
  serve->add_option("--log-level", log_level, "trace|debug|info|warn|error")
      ->envname("AEROLABEL_LOG_LEVEL");
  serve->add_option("--overlay-alpha", overlay_alpha, "Default overlay tile alpha")
      ->check(CLI::Range(0, 255));
  serve->add_option("--workers", config.workers, "Job worker threads")->check(CLI::PositiveNumber);
  serve->add_option("--k", config.default_segmenter.k, "Default segmenter merge threshold")
      ->check(CLI::NonNegativeNumber);
  serve->add_option("--min-region-size", config.default_segmenter.min_region_size,
                    "Default minimum segment size in pixels")
      ->check(CLI::PositiveNumber);

  std::string image_path, out_path, project_dir;
  SegmenterParams seg_params;
  auto* segment = app.add_subcommand("segment", "Segment a PNG into a BOSCSEG1 raster");
  segment->add_option("image", image_path)->required()->check(CLI::ExistingFile);
  segment->add_option("output", out_path)->required();
  segment->add_option("--k", seg_params.k)->check(CLI::NonNegativeNumber);
  segment->add_option("--min-region-size", seg_params.min_region_size)->check(CLI::PositiveNumber);

  auto* stats = app.add_subcommand("stats", "Print the class statistics of a saved project");
  stats->add_option("project", project_dir)->required()->check(CLI::ExistingDirectory);

  int z = 0;
  std::uint32_t tx = 0, ty = 0;
  int tile_alpha = config.overlay_alpha;
  auto* tile = app.add_subcommand("tile", "Render one overlay tile of a saved project");
  tile->add_option("project", project_dir)->required()->check(CLI::ExistingDirectory);
  tile->add_option("z", z)->required()->check(CLI::Range(0, kMaxZoom));
  tile->add_option("x", tx)->required();
  tile->add_option("y", ty)->required();
  tile->add_option("output", out_path)->required();
  tile->add_option("--alpha", tile_alpha)->check(CLI::Range(0, 255));

  auto* geojson = app.add_subcommand("geojson", "Export segment polygons of a saved project");
  geojson->add_option("project", project_dir)->required()->check(CLI::ExistingDirectory);
  geojson->add_option("output", out_path)->required();

  auto* bundle = app.add_subcommand("export", "Write the export bundle (tar) of a saved project");
  bundle->add_option("project", project_dir)->required()->check(CLI::ExistingDirectory);
  bundle->add_option("output", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      spdlog::set_level(spdlog::level::from_str(log_level));
      if (!web_root.empty()) config.web_root = web_root;
      config.overlay_alpha = static_cast<std::uint8_t>(overlay_alpha);
      HttpService service(config);
      service.bind();
      g_service = &service;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      service.run();
      g_service = nullptr;
    } else if (*segment) {
      const RasterImage image = decode_png(read_file(image_path));
      const SegmentMap segmap = segment_auto(image, seg_params);
      write_file_atomic(out_path, encode_segment_raster(segmap));
      std::cout << segmap.registry().size() << " segments\n";
    } else if (*stats) {
      const Project p = load_project(project_dir);
      const ClassStats s = compute_stats(require_segments(p), p.class_map, p.georef);
      std::cout << stats_document(s, p.classes).dump(2) << "\n";
    } else if (*tile) {
      const Project p = load_project(project_dir);
      const OverlayTile t = render_overlay_tile(p, z, tx, ty, static_cast<std::uint8_t>(tile_alpha));
      write_file_atomic(out_path, encode_png_rgba(kTilePixels, kTilePixels, t.pixels));
    } else if (*geojson) {
      write_file_atomic(out_path, export_geojson(load_project(project_dir)).dump() + "\n");
    } else if (*bundle) {
      write_file_atomic(out_path, export_bundle(load_project(project_dir)));
    }
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
