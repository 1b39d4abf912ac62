#include "rtf/params.hpp"

#include <stdexcept>

namespace rtf {

std::size_t ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  const std::size_t i = entries_.size();
  Tensor grad(value.shape());
  entries_.push_back({name, std::move(value), std::move(grad)});
  index_.emplace(name, i);
  return i;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.grad.fill(0);
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (!(entries_[i].value == other.entries_[i].value)) return false;
  }
  return true;
}

GradBuffer make_grad_buffer(const ParamStore& store) {
  GradBuffer buf;
  buf.reserve(store.size());
  for (const auto& e : store) buf.emplace_back(e.value.shape());
  return buf;
}

}  // namespace rtf
