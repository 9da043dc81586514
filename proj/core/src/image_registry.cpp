// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/image_registry.hpp"

#include <link.h>
#include <sys/auxv.h>
#include <unistd.h>

#include <cstring>

namespace xflow {
namespace {

struct PhdrImage {
  std::string path;
  std::uintptr_t bias;
  std::vector<AddrRange> ranges;
};

int collect_cb(struct dl_phdr_info* info, std::size_t, void* data) {
  auto* out = static_cast<std::vector<PhdrImage>*>(data);
  PhdrImage img;
  img.bias = info->dlpi_addr;
  img.path = info->dlpi_name ? info->dlpi_name : "";
  for (int i = 0; i < info->dlpi_phnum; ++i) {
    const auto& ph = info->dlpi_phdr[i];
    if (ph.p_type != PT_LOAD) continue;
    img.ranges.push_back(
        {info->dlpi_addr + ph.p_vaddr, info->dlpi_addr + ph.p_vaddr + ph.p_memsz});
  }
  out->push_back(std::move(img));
  return 0;
}

std::string self_exe_path() {
  char buf[4096];
  ssize_t n = readlink("/proc/self/exe", buf, sizeof buf - 1);
  if (n <= 0) return "/proc/self/exe";
  buf[n] = '\0';
  return buf;
}

}  // namespace

std::string_view path_basename(std::string_view path) {
  auto pos = path.rfind('/');
  return pos == std::string_view::npos ? path : path.substr(pos + 1);
}

std::vector<ImageId> ImageRegistry::scan(
    const void* self_addr, const std::vector<std::string>& deny_substrings) {
  std::vector<PhdrImage> found;
  dl_iterate_phdr(collect_cb, &found);

  const std::uintptr_t interp_base = getauxval(AT_BASE);
  std::vector<ImageId> fresh;

  for (std::size_t i = 0; i < found.size(); ++i) {
    auto& f = found[i];
    // The walk reports the main executable first, under an empty name. Any
    // other unnamed entry is a kernel mapping with no backing file.
    bool is_main = i == 0;
    if (!is_main && f.path.empty()) continue;
    std::string path = is_main ? self_exe_path() : f.path;
    if (path.find("linux-vdso") != std::string::npos ||
        path.find("linux-gate") != std::string::npos)
      continue;

    bool known = false;
    for (const auto& img : images_)
      if (img.bias == f.bias && img.path == path) known = true;
    if (known) continue;

    LoadedImage img;
    img.id = static_cast<ImageId>(images_.size());
    img.path = std::move(path);
    img.bias = f.bias;
    img.load_ranges = std::move(f.ranges);
    img.is_main = is_main;
    img.is_linker =
        (interp_base && f.bias == interp_base) ||
        path_basename(img.path).find("ld-linux") != std::string_view::npos ||
        path_basename(img.path) == "ld.so";
    if (self_addr)
      img.is_agent = img.contains(reinterpret_cast<std::uintptr_t>(self_addr));
    for (const auto& deny : deny_substrings)
      if (!deny.empty() && img.path.find(deny) != std::string::npos)
        img.denied = true;
    images_.push_back(std::move(img));
    fresh.push_back(images_.back().id);
  }
  return fresh;
}

const LoadedImage* ImageRegistry::find(ImageId id) const {
  return id < images_.size() ? &images_[id] : nullptr;
}

const LoadedImage* ImageRegistry::find_by_addr(std::uintptr_t addr) const {
  for (const auto& img : images_)
    if (img.contains(addr)) return &img;
  return nullptr;
}

const LoadedImage* ImageRegistry::find_by_path(const std::string& path) const {
  for (const auto& img : images_)
    if (img.path == path) return &img;
  return nullptr;
}

}  // namespace xflow
