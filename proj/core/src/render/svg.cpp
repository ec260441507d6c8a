#include "sketchxai/render/svg.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "sketchxai/util/error.hpp"

namespace sketchxai::render {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                 "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string label_name(int label, const std::vector<std::string>& categories) {
  if (label >= 0 && label < static_cast<int>(categories.size())) return categories[static_cast<std::size_t>(label)];
  return std::to_string(label);
}

}  // namespace

std::string render_svg(const data::Sketch& sketch, const SvgOptions& options) {
  if (options.pixels <= 0) throw ValidationError("pixels", "must be positive");
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(options.pixels) + "\" height=\"" +
         std::to_string(options.pixels) + "\" viewBox=\"-1 -1 2 2\">\n";
  out += "<defs><clipPath id=\"canvas\"><rect x=\"-1\" y=\"-1\" width=\"2\" height=\"2\"/></clipPath></defs>\n";
  out += "<rect x=\"-1\" y=\"-1\" width=\"2\" height=\"2\" fill=\"white\"/>\n";
  out += "<g clip-path=\"url(#canvas)\" fill=\"none\" stroke-linecap=\"round\" stroke-linejoin=\"round\" "
         "stroke-width=\"" + fixed(options.stroke_width) + "\">\n";
  for (std::size_t i = 0; i < sketch.strokes.size(); ++i) {
    out += "<polyline stroke=\"";
    out += kPalette[i % kPalette.size()];
    out += "\" points=\"";
    bool first = true;
    for (const auto& p : sketch.strokes[i].points) {
      if (!first) out += ' ';
      first = false;
      out += fixed(p.x) + "," + fixed(p.y);
    }
    out += "\"/>\n";
  }
  out += "</g>\n";
  if (!options.caption.empty()) {
    out += "<text x=\"-0.97\" y=\"-0.9\" font-family=\"monospace\" font-size=\"0.07\" fill=\"#333\">" +
           escape(options.caption) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

FrameFormat frame_format_from_string(const std::string& s) {
  if (s == "svg_frames" || s == "svg") return FrameFormat::kSvgFrames;
  if (s == "gif") return FrameFormat::kGif;
  throw ValidationError("format", "unknown frame format '" + s + "'");
}

std::string frame_caption(const sli::Trajectory& traj, std::size_t frame, const std::vector<std::string>& categories) {
  const auto& f = traj.frames.at(frame);
  std::string s = "t=" + std::to_string(f.t) + " " + label_name(traj.original_label, categories) + " " +
                  fixed(f.p_orig).substr(0, 5);
  if (traj.target_label != traj.original_label) {
    s += " -> " + label_name(traj.target_label, categories) + " " + fixed(f.p_target).substr(0, 5);
  }
  return s;
}

std::vector<std::size_t> frame_selection(std::size_t frame_count, int stride) {
  if (stride < 1) throw ValidationError("stride", "must be >= 1");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < frame_count; i += static_cast<std::size_t>(stride)) out.push_back(i);
  if (frame_count > 0 && out.back() != frame_count - 1) out.push_back(frame_count - 1);
  return out;
}

std::vector<std::filesystem::path> render_trajectory(const sli::Trajectory& traj,
                                                     const std::vector<std::string>& categories,
                                                     const std::filesystem::path& dir, FrameFormat format, int stride,
                                                     const SvgOptions& options) {
  if (format == FrameFormat::kGif) throw Error(ErrorCode::kUnsupported, "GIF output is not built; use svg_frames");
  const auto frames = frame_selection(traj.frames.size(), stride);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto i : frames) {
    SvgOptions opt = options;
    opt.caption = frame_caption(traj, i, categories);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.svg", traj.frames[i].t);
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out << render_svg(traj.frame_sketch(i), opt);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace sketchxai::render
