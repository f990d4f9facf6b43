#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace olim {

/// Array-based indexed binary min-heap with decrease-key, keyed by value with
/// ties broken by node id so solves are reproducible. Positions are tracked
/// per node; exactly the trial nodes live in the heap.
class IndexedMinHeap {
 public:
  explicit IndexedMinHeap(std::int64_t n_nodes)
      : pos_(static_cast<std::size_t>(n_nodes), -1) {}

  bool contains(std::int64_t id) const { return pos_[static_cast<std::size_t>(id)] >= 0; }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

  double key(std::int64_t id) const {
    return heap_[static_cast<std::size_t>(pos_[static_cast<std::size_t>(id)])].key;
  }

  void push(std::int64_t id, double key) {
    if (contains(id)) throw std::invalid_argument("node already in heap");
    pos_[static_cast<std::size_t>(id)] = static_cast<std::int64_t>(heap_.size());
    heap_.push_back({key, id});
    swim(heap_.size() - 1);
  }

  void decrease(std::int64_t id, double key) {
    std::int64_t p = pos_[static_cast<std::size_t>(id)];
    if (p < 0) throw std::invalid_argument("node not in heap");
    if (key > heap_[static_cast<std::size_t>(p)].key)
      throw std::invalid_argument("decrease-key may only lower a key");
    heap_[static_cast<std::size_t>(p)].key = key;
    swim(static_cast<std::size_t>(p));
  }

  std::int64_t pop_min() {
    if (heap_.empty()) throw std::logic_error("pop from empty heap");
    std::int64_t id = heap_[0].id;
    swap_nodes(0, heap_.size() - 1);
    heap_.pop_back();
    pos_[static_cast<std::size_t>(id)] = -1;
    if (!heap_.empty()) sink(0);
    return id;
  }

 private:
  struct Entry {
    double key;
    std::int64_t id;
  };

  bool less(const Entry& a, const Entry& b) const {
    if (a.key != b.key) return a.key < b.key;
    return a.id < b.id;
  }

  void swap_nodes(std::size_t a, std::size_t b) {
    std::swap(heap_[a], heap_[b]);
    pos_[static_cast<std::size_t>(heap_[a].id)] = static_cast<std::int64_t>(a);
    pos_[static_cast<std::size_t>(heap_[b].id)] = static_cast<std::int64_t>(b);
  }

  void swim(std::size_t i) {
    while (i > 0) {
      std::size_t parent = (i - 1) / 2;
      if (!less(heap_[i], heap_[parent])) break;
      swap_nodes(i, parent);
      i = parent;
    }
  }

  void sink(std::size_t i) {
    for (;;) {
      std::size_t l = 2 * i + 1, r = 2 * i + 2, m = i;
      if (l < heap_.size() && less(heap_[l], heap_[m])) m = l;
      if (r < heap_.size() && less(heap_[r], heap_[m])) m = r;
      if (m == i) break;
      swap_nodes(i, m);
      i = m;
    }
  }

  std::vector<Entry> heap_;
  std::vector<std::int64_t> pos_;
};

}  // namespace olim
