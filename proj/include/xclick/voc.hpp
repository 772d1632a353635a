#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xclick/evaluation.hpp"

namespace xclick {

struct VocObject {
  std::string name;
  BoundingBox box;  // 0-based inclusive
  bool difficult = false;
  bool truncated = false;
};

struct VocAnnotation {
  std::string filename;
  int width = 0;
  int height = 0;
  std::vector<VocObject> objects;
};

// PASCAL VOC XML; boxes are converted from 1-based to 0-based pixels.
VocAnnotation parse_voc_xml(const std::filesystem::path& path);

struct VocConvertOptions {
  std::filesystem::path annotations_dir;  // *.xml
  std::filesystem::path images_dir;       // JPEGImages
  // SegmentationObject PNGs (instance k = k-th object, 255 = void). When set,
  // only images with a segmentation file are kept and per-object masks are
  // written to mask_out_dir.
  std::optional<std::filesystem::path> segmentation_dir;
  std::optional<std::filesystem::path> mask_out_dir;
  // Structured edge maps named <stem>.png.
  std::optional<std::filesystem::path> edges_dir;
  // Only these image stems (e.g. from ImageSets/Segmentation/trainval.txt).
  std::optional<std::vector<std::string>> image_ids;
  bool skip_difficult = false;
};

// Entries ordered by XML file name, then object order; ids are <stem>_<k>.
std::vector<ManifestEntry> convert_voc(const VocConvertOptions& options);

std::vector<std::string> read_image_set(const std::filesystem::path& path);

}  // namespace xclick
