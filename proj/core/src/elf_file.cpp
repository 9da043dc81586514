// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0

#include "xflow/elf_file.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstring>

namespace xflow {

ElfFile::~ElfFile() {
  if (data_) munmap(data_, size_);
}

ElfFile::ElfFile(ElfFile&& other) noexcept { *this = std::move(other); }

ElfFile& ElfFile::operator=(ElfFile&& other) noexcept {
  if (this != &other) {
    if (data_) munmap(data_, size_);
    data_ = other.data_;
    size_ = other.size_;
    path_ = std::move(other.path_);
    error_ = std::move(other.error_);
    type_ = other.type_;
    bind_now_ = other.bind_now_;
    dynsym_ = other.dynsym_;
    dynsym_count_ = other.dynsym_count_;
    dynstr_ = other.dynstr_;
    dynstr_size_ = other.dynstr_size_;
    plt_relocs_ = std::move(other.plt_relocs_);
    glob_dat_ = std::move(other.glob_dat_);
    sections_ = std::move(other.sections_);
    loads_ = std::move(other.loads_);
    other.data_ = nullptr;
    other.size_ = 0;
  }
  return *this;
}

ElfFile ElfFile::open(const std::string& path) {
  ElfFile f;
  f.path_ = path;
  int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) {
    f.error_ = "cannot open";
    return f;
  }
  struct stat st {};
  if (fstat(fd, &st) != 0 || st.st_size < (off_t)sizeof(Elf64_Ehdr)) {
    close(fd);
    f.error_ = "not an ELF object";
    return f;
  }
  void* m = mmap(nullptr, (size_t)st.st_size, PROT_READ, MAP_PRIVATE, fd, 0);
  close(fd);
  if (m == MAP_FAILED) {
    f.error_ = "mmap failed";
    return f;
  }
  f.data_ = static_cast<std::uint8_t*>(m);
  f.size_ = (size_t)st.st_size;

  const auto* eh = reinterpret_cast<const Elf64_Ehdr*>(f.data_);
  if (std::memcmp(eh->e_ident, ELFMAG, SELFMAG) != 0 ||
      eh->e_ident[EI_CLASS] != ELFCLASS64 ||
      eh->e_ident[EI_DATA] != ELFDATA2LSB || eh->e_machine != EM_X86_64) {
    munmap(f.data_, f.size_);
    f.data_ = nullptr;
    f.error_ = "unsupported ELF class or machine";
    return f;
  }
  f.type_ = eh->e_type;
  f.parse();
  return f;
}

const std::uint8_t* ElfFile::file_off(std::uint64_t off,
                                      std::uint64_t len) const {
  if (off > size_ || len > size_ - off) return nullptr;
  return data_ + off;
}

// Translate a link-time vaddr to a file pointer via the PT_LOAD table.
const std::uint8_t* ElfFile::at_vaddr(std::uintptr_t vaddr,
                                      std::uint64_t len) const {
  for (const auto& ph : loads_) {
    if (vaddr >= ph.p_vaddr && vaddr + len <= ph.p_vaddr + ph.p_filesz)
      return file_off(ph.p_offset + (vaddr - ph.p_vaddr), len);
  }
  return nullptr;
}

void ElfFile::parse() {
  const auto* eh = reinterpret_cast<const Elf64_Ehdr*>(data_);

  const Elf64_Phdr* dyn_ph = nullptr;
  for (std::uint16_t i = 0; i < eh->e_phnum; ++i) {
    const auto* ph = reinterpret_cast<const Elf64_Phdr*>(
        file_off(eh->e_phoff + std::uint64_t(i) * eh->e_phentsize,
                 sizeof(Elf64_Phdr)));
    if (!ph) break;
    if (ph->p_type == PT_LOAD) loads_.push_back(*ph);
    if (ph->p_type == PT_DYNAMIC) dyn_ph = ph;
  }

  // Section table, for PLT boundaries and name-based access in tests.
  if (eh->e_shoff && eh->e_shnum && eh->e_shstrndx != SHN_UNDEF) {
    const auto* shstr_hdr = reinterpret_cast<const Elf64_Shdr*>(
        file_off(eh->e_shoff + std::uint64_t(eh->e_shstrndx) * eh->e_shentsize,
                 sizeof(Elf64_Shdr)));
    const char* shstr =
        shstr_hdr ? reinterpret_cast<const char*>(
                        file_off(shstr_hdr->sh_offset, shstr_hdr->sh_size))
                  : nullptr;
    if (shstr) {
      for (std::uint16_t i = 0; i < eh->e_shnum; ++i) {
        const auto* sh = reinterpret_cast<const Elf64_Shdr*>(
            file_off(eh->e_shoff + std::uint64_t(i) * eh->e_shentsize,
                     sizeof(Elf64_Shdr)));
        if (!sh || sh->sh_name >= shstr_hdr->sh_size) continue;
        sections_.push_back({std::string_view(shstr + sh->sh_name),
                             sh->sh_offset, sh->sh_size, sh->sh_addr,
                             sh->sh_entsize, sh->sh_type});
      }
    }
  }

  if (!dyn_ph) return;  // statically linked or degenerate: nothing dynamic

  std::uintptr_t jmprel = 0, rela = 0, symtab = 0, strtab = 0;
  std::uint64_t pltrelsz = 0, relasz = 0, strsz = 0, relaent = sizeof(Elf64_Rela);
  const auto* dyn = reinterpret_cast<const Elf64_Dyn*>(
      file_off(dyn_ph->p_offset, dyn_ph->p_filesz));
  if (!dyn) return;
  for (std::size_t i = 0; i < dyn_ph->p_filesz / sizeof(Elf64_Dyn); ++i) {
    switch (dyn[i].d_tag) {
      case DT_NULL: i = dyn_ph->p_filesz; break;
      case DT_JMPREL: jmprel = dyn[i].d_un.d_ptr; break;
      case DT_PLTRELSZ: pltrelsz = dyn[i].d_un.d_val; break;
      case DT_RELA: rela = dyn[i].d_un.d_ptr; break;
      case DT_RELASZ: relasz = dyn[i].d_un.d_val; break;
      case DT_RELAENT: relaent = dyn[i].d_un.d_val; break;
      case DT_SYMTAB: symtab = dyn[i].d_un.d_ptr; break;
      case DT_STRTAB: strtab = dyn[i].d_un.d_ptr; break;
      case DT_STRSZ: strsz = dyn[i].d_un.d_val; break;
      case DT_BIND_NOW: bind_now_ = true; break;
      case DT_FLAGS:
        if (dyn[i].d_un.d_val & DF_BIND_NOW) bind_now_ = true;
        break;
      case DT_FLAGS_1:
        if (dyn[i].d_un.d_val & DF_1_NOW) bind_now_ = true;
        break;
      default: break;
    }
  }

  if (strtab && strsz) {
    dynstr_ = reinterpret_cast<const char*>(at_vaddr(strtab, strsz));
    dynstr_size_ = dynstr_ ? strsz : 0;
  }
  if (symtab && dynstr_) {
    // DT_SYMTAB carries no count; the string table follows the symbol
    // table in practice, which bounds it well enough for validation.
    dynsym_ = reinterpret_cast<const Elf64_Sym*>(
        at_vaddr(symtab, sizeof(Elf64_Sym)));
    if (dynsym_ && strtab > symtab)
      dynsym_count_ = (strtab - symtab) / sizeof(Elf64_Sym);
    if (dynsym_ && dynsym_count_ == 0) {
      for (const auto& s : sections_)
        if (s.name == ".dynsym" && s.entsize)
          dynsym_count_ = s.size / s.entsize;
    }
  }

  auto sym_name = [&](std::uint32_t idx) -> std::string_view {
    if (!dynsym_ || idx >= dynsym_count_) return {};
    std::uint32_t off = dynsym_[idx].st_name;
    if (!dynstr_ || off >= dynstr_size_) return {};
    const char* s = dynstr_ + off;
    std::size_t maxlen = dynstr_size_ - off;
    return std::string_view(s, strnlen(s, maxlen));
  };

  auto read_table = [&](std::uintptr_t addr, std::uint64_t bytes,
                        bool plt_table) {
    if (!addr || !bytes || relaent < sizeof(Elf64_Rela)) return;
    const auto* tab =
        reinterpret_cast<const Elf64_Rela*>(at_vaddr(addr, bytes));
    if (!tab) return;
    for (std::uint64_t i = 0; i < bytes / relaent; ++i) {
      const Elf64_Rela& r = tab[i];
      std::uint32_t type = ELF64_R_TYPE(r.r_info);
      std::uint32_t sym = ELF64_R_SYM(r.r_info);
      if (plt_table) {
        if (type != R_X86_64_JUMP_SLOT || sym == 0) continue;
        plt_relocs_.push_back({r.r_offset, type, sym, r.r_addend,
                               sym_name(sym)});
      } else {
        if (type != R_X86_64_GLOB_DAT || sym == 0) continue;
        glob_dat_.push_back({r.r_offset, type, sym, r.r_addend,
                             sym_name(sym)});
      }
    }
  };
  read_table(jmprel, pltrelsz, true);
  read_table(rela, relasz, false);
}

std::optional<AddrRange> ElfFile::section_range(std::string_view name) const {
  for (const auto& s : sections_)
    if (s.name == name && s.size)
      return AddrRange{s.vaddr, s.vaddr + s.size};
  return std::nullopt;
}

std::span<const std::uint8_t> ElfFile::section_bytes(
    std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name != name || s.type == SHT_NOBITS) continue;
    const std::uint8_t* p = file_off(s.offset, s.size);
    if (p) return {p, s.size};
  }
  return {};
}

std::uint64_t ElfFile::section_entsize(std::string_view name) const {
  for (const auto& s : sections_)
    if (s.name == name) return s.entsize;
  return 0;
}

void ElfFile::for_each_export(
    const std::function<void(const ExportedSym&)>& fn) const {
  if (!dynsym_ || !dynstr_) return;
  for (std::size_t i = 1; i < dynsym_count_; ++i) {
    const Elf64_Sym& s = dynsym_[i];
    if (s.st_shndx == SHN_UNDEF) continue;
    unsigned bind = ELF64_ST_BIND(s.st_info);
    if (bind != STB_GLOBAL && bind != STB_WEAK) continue;
    unsigned type = ELF64_ST_TYPE(s.st_info);
    if (type != STT_FUNC && type != STT_GNU_IFUNC && type != STT_OBJECT)
      continue;
    std::uint32_t off = s.st_name;
    if (off == 0 || off >= dynstr_size_) continue;
    const char* nm = dynstr_ + off;
    ExportedSym e;
    e.name = std::string_view(nm, strnlen(nm, dynstr_size_ - off));
    e.value = s.st_value;
    e.is_function = type != STT_OBJECT;
    e.is_weak = bind == STB_WEAK;
    fn(e);
  }
}

}  // namespace xflow
