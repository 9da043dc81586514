// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Read-only view of an ELF object on disk. Dynamic relocations and symbols
// are located through PT_DYNAMIC, the same structures the loader itself
// uses; section headers are consulted only for procedure-linkage section
// boundaries, which have no dynamic-table equivalent.
#pragma once

#include <elf.h>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xflow/types.hpp"

namespace xflow {

/// One dynamic relocation we may intercept.
struct RelocEntry {
  std::uintptr_t offset = 0;  // link-time vaddr of the cell
  std::uint32_t type = 0;     // R_X86_64_*
  std::uint32_t sym_index = 0;
  std::int64_t addend = 0;
  std::string_view symbol;  // empty when sym_index == 0
};

/// Exported (defined) dynamic symbol.
struct ExportedSym {
  std::string_view name;
  std::uintptr_t value = 0;  // link-time vaddr
  bool is_function = false;
  bool is_weak = false;
};

class ElfFile {
 public:
  ElfFile() = default;
  ~ElfFile();
  ElfFile(ElfFile&&) noexcept;
  ElfFile& operator=(ElfFile&&) noexcept;
  ElfFile(const ElfFile&) = delete;
  ElfFile& operator=(const ElfFile&) = delete;

  /// Maps the file; returns an invalid object (and an explanation via
  /// error()) for anything that is not a 64-bit little-endian x86-64 ELF.
  static ElfFile open(const std::string& path);

  bool valid() const { return data_ != nullptr; }
  const std::string& error() const { return error_; }
  const std::string& path() const { return path_; }
  std::uint16_t type() const { return type_; }  // ET_DYN / ET_EXEC

  /// Jump-slot relocations (DT_JMPREL). Order matches the table, so the
  /// vector index is the index a lazy-resolution stub must push.
  const std::vector<RelocEntry>& plt_relocs() const { return plt_relocs_; }

  /// Non-PLT dynamic relocations (DT_RELA), filtered to R_X86_64_GLOB_DAT.
  const std::vector<RelocEntry>& glob_dat_relocs() const { return glob_dat_; }

  /// Link-time section span by name; empty optional when absent.
  std::optional<AddrRange> section_range(std::string_view name) const;

  /// Raw bytes of a section (file view).
  std::span<const std::uint8_t> section_bytes(std::string_view name) const;

  std::uint64_t section_entsize(std::string_view name) const;

  /// Calls fn for every defined global/weak dynamic symbol.
  void for_each_export(const std::function<void(const ExportedSym&)>& fn) const;

  /// True when the object asks for immediate binding (DT_BIND_NOW or the
  /// equivalent DT_FLAGS/DT_FLAGS_1 bits).
  bool bind_now() const { return bind_now_; }

 private:
  const std::uint8_t* file_off(std::uint64_t off, std::uint64_t len) const;
  const std::uint8_t* at_vaddr(std::uintptr_t vaddr, std::uint64_t len) const;
  void parse();

  std::uint8_t* data_ = nullptr;
  std::size_t size_ = 0;
  std::string path_;
  std::string error_;
  std::uint16_t type_ = 0;
  bool bind_now_ = false;

  const Elf64_Sym* dynsym_ = nullptr;
  std::size_t dynsym_count_ = 0;
  const char* dynstr_ = nullptr;
  std::size_t dynstr_size_ = 0;

  std::vector<RelocEntry> plt_relocs_;
  std::vector<RelocEntry> glob_dat_;

  struct Section {
    std::string_view name;
    std::uint64_t offset, size, vaddr, entsize;
    std::uint32_t type;
  };
  std::vector<Section> sections_;
  std::vector<Elf64_Phdr> loads_;
};

}  // namespace xflow
