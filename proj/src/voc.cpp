#include "xclick/voc.hpp"

#include <algorithm>
#include <fstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "xclick/error.hpp"
#include "xclick/image_io.hpp"

namespace xclick {
namespace fs = std::filesystem;
namespace pt = boost::property_tree;

VocAnnotation parse_voc_xml(const fs::path& path) {
  pt::ptree tree;
  try {
    pt::read_xml(path.string(), tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  VocAnnotation a;
  try {
    const pt::ptree& root = tree.get_child("annotation");
    a.filename = root.get<std::string>("filename");
    a.width = root.get<int>("size.width");
    a.height = root.get<int>("size.height");
    for (const auto& [key, node] : root) {
      if (key != "object") continue;
      VocObject o;
      o.name = node.get<std::string>("name");
      o.difficult = node.get<int>("difficult", 0) != 0;
      o.truncated = node.get<int>("truncated", 0) != 0;
      // VOC pixel indices start at 1.
      o.box = {node.get<int>("bndbox.xmin") - 1, node.get<int>("bndbox.ymin") - 1,
               node.get<int>("bndbox.xmax") - 1, node.get<int>("bndbox.ymax") - 1};
      if (!o.box.valid()) throw Error(ErrorCode::Parse, "box has min > max");
      a.objects.push_back(std::move(o));
    }
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
  return a;
}

std::vector<std::string> read_image_set(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot open");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    // Class-specific sets carry a second column; keep the first token.
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    const auto end = line.find_first_of(" \t\r", start);
    ids.push_back(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
  }
  return ids;
}

namespace {

BinaryMask instance_mask(const PngData& seg, int instance) {
  BinaryMask m(seg.width, seg.height);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto v = seg.samples[i];
    if (v == 255) {
      m[i] = Label::Ignore;
    } else if (v == instance) {
      m[i] = Label::Object;
    }
  }
  return m;
}

}  // namespace

std::vector<ManifestEntry> convert_voc(const VocConvertOptions& options) {
  if (!fs::is_directory(options.annotations_dir)) {
    throw Error(ErrorCode::Io, options.annotations_dir.string() + ": not a directory");
  }
  if (options.segmentation_dir && !options.mask_out_dir) {
    throw Error(ErrorCode::InvalidArgument, "segmentation_dir needs mask_out_dir");
  }
  std::vector<fs::path> xml_files;
  if (options.image_ids) {
    for (const auto& id : *options.image_ids) xml_files.push_back(options.annotations_dir / (id + ".xml"));
  } else {
    for (const auto& f : fs::directory_iterator(options.annotations_dir)) {
      if (f.is_regular_file() && f.path().extension() == ".xml") xml_files.push_back(f.path());
    }
  }
  std::sort(xml_files.begin(), xml_files.end());
  if (options.mask_out_dir) fs::create_directories(*options.mask_out_dir);

  std::vector<ManifestEntry> entries;
  for (const auto& xml : xml_files) {
    const std::string stem = xml.stem().string();
    const VocAnnotation a = parse_voc_xml(xml);
    std::optional<PngData> seg;
    if (options.segmentation_dir) {
      const fs::path seg_path = *options.segmentation_dir / (stem + ".png");
      if (!fs::exists(seg_path)) continue;
      seg = read_png(seg_path, false);
      if (seg->channels != 1) throw Error(ErrorCode::Parse, seg_path.string() + ": expected indexed PNG");
    }
    for (std::size_t k = 0; k < a.objects.size(); ++k) {
      const VocObject& o = a.objects[k];
      if (options.skip_difficult && o.difficult) continue;
      ManifestEntry e;
      e.id = stem + "_" + std::to_string(k + 1);
      e.image = options.images_dir / a.filename;
      e.class_label = o.name;
      e.box = o.box;
      if (options.edges_dir) e.edges = *options.edges_dir / (stem + ".png");
      if (seg) {
        const fs::path mask_path = *options.mask_out_dir / (e.id + ".png");
        save_mask(mask_path, instance_mask(*seg, static_cast<int>(k + 1)));
        e.mask = mask_path;
      }
      entries.push_back(std::move(e));
    }
  }
  return entries;
}

}  // namespace xclick
