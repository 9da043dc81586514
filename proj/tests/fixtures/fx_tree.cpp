// Copyright (c) xflow contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Tree-of-strings workload: a binary search tree keyed by long strings
// with a long shared prefix, hammered with lookups. Node ordering uses
// std::string::compare(const char*), whose definition lives out of line
// in the C++ runtime (the in-class overloads melt into local memcmp
// calls), so the comparison time lands on a runtime-owned symbol. Built
// at -O0 to keep every call a real call.

#include <cstdio>
#include <cstdlib>
#include <string>

namespace {

struct Node {
  std::string key;
  unsigned long value;
  Node* left = nullptr;
  Node* right = nullptr;
  Node(std::string k, unsigned long v) : key(std::move(k)), value(v) {}
};

Node* insert(Node* n, std::string key, unsigned long value) {
  if (!n) return new Node(std::move(key), value);
  int c = n->key.compare(key.c_str());
  if (c > 0)
    n->left = insert(n->left, std::move(key), value);
  else if (c < 0)
    n->right = insert(n->right, std::move(key), value);
  return n;
}

const Node* find(const Node* n, const char* key) {
  while (n) {
    int c = n->key.compare(key);
    if (c == 0) return n;
    n = c > 0 ? n->left : n->right;
  }
  return nullptr;
}

void drop(Node* n) {
  if (!n) return;
  drop(n->left);
  drop(n->right);
  delete n;
}

}  // namespace

int main(int argc, char** argv) {
  unsigned long nodes = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2000;
  unsigned long finds = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 200000;

  const std::string prefix(200, 'k');
  Node* root = nullptr;
  for (unsigned long i = 0; i < nodes; ++i) {
    char tail[32];
    std::snprintf(tail, sizeof tail, "%012lu", i * 2654435761ul % nodes);
    root = insert(root, prefix + tail, i);
  }

  unsigned long hits = 0;
  unsigned long s = 12345;
  std::string probe;
  for (unsigned long i = 0; i < finds; ++i) {
    s = s * 1103515245 + 12345;
    char tail[32];
    std::snprintf(tail, sizeof tail, "%012lu", s % nodes);
    probe = prefix;
    probe += tail;
    if (find(root, probe.c_str())) hits += 1;
  }

  std::printf("hits=%lu finds=%lu\n", hits, finds);
  drop(root);
  return hits <= finds && hits > 0 ? 0 : 1;
}
