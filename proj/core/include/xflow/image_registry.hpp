// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Append-only table of loaded ELF images. Ids are handed out in discovery
// order and never reused; the main executable is always id 0, so ledger
// readers can rely on it.
#pragma once

#include <mutex>
#include <string>
#include <vector>

#include "xflow/types.hpp"

namespace xflow {

class ImageRegistry {
 public:
  /// Walks the loader's link map and appends images not seen before
  /// (keyed by path + load bias). `self_addr` is any address inside the
  /// agent so its image can be marked. Returns ids of new images.
  std::vector<ImageId> scan(const void* self_addr,
                            const std::vector<std::string>& deny_substrings);

  const LoadedImage* find(ImageId id) const;
  const LoadedImage* find_by_addr(std::uintptr_t addr) const;
  const LoadedImage* find_by_path(const std::string& path) const;

  std::size_t size() const { return images_.size(); }
  const std::vector<LoadedImage>& images() const { return images_; }

 private:
  std::vector<LoadedImage> images_;
};

/// Basename helper shared with the analyzer's rendering.
std::string_view path_basename(std::string_view path);

}  // namespace xflow
