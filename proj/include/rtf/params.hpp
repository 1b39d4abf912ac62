#pragma once

#include <map>
#include <string>
#include <vector>

#include "rtf/tensor.hpp"

namespace rtf {

// Named trainable arrays with matching gradient buffers, kept in insertion
// order so iteration (and hence checkpoints and updates) is deterministic.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  // Throws std::invalid_argument on a duplicate name.
  std::size_t add(const std::string& name, Tensor value);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  // Throws std::out_of_range for unknown names.
  std::size_t index_of(const std::string& name) const;

  Tensor& value(const std::string& name) { return entries_[index_of(name)].value; }
  const Tensor& value(const std::string& name) const { return entries_[index_of(name)].value; }
  Tensor& grad(const std::string& name) { return entries_[index_of(name)].grad; }
  const Tensor& grad(const std::string& name) const { return entries_[index_of(name)].grad; }

  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  std::vector<Entry>::iterator begin() { return entries_.begin(); }
  std::vector<Entry>::iterator end() { return entries_.end(); }
  std::vector<Entry>::const_iterator begin() const { return entries_.begin(); }
  std::vector<Entry>::const_iterator end() const { return entries_.end(); }

  void zero_grad();

  bool operator==(const ParamStore& other) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

// Per-parameter gradient buffers aligned with a ParamStore's entries.
using GradBuffer = std::vector<Tensor>;

GradBuffer make_grad_buffer(const ParamStore& store);

}  // namespace rtf
