#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "snowshr/errors.hpp"
#include "snowshr/tensor.hpp"

namespace snowshr {

// Ordered, named collection of trainable tensors. Insertion order is the
// canonical iteration order everywhere (optimizer updates, checkpoints), so
// runs replay identically.
class ParamSet {
  public:
    Tensor& add(const std::string& name, Tensor t) {
        if (index_.count(name)) throw ContractError("ParamSet: duplicate parameter '" + name + "'");
        t.set_requires_grad(true);
        index_[name] = tensors_.size();
        names_.push_back(name);
        tensors_.push_back(std::move(t));
        return tensors_.back();
    }

    Tensor& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("ParamSet: no parameter '" + name + "'");
        return tensors_[it->second];
    }
    const Tensor& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("ParamSet: no parameter '" + name + "'");
        return tensors_[it->second];
    }

    bool contains(const std::string& name) const { return index_.count(name) > 0; }
    std::size_t size() const { return tensors_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    Tensor& tensor(std::size_t i) { return tensors_[i]; }
    const Tensor& tensor(std::size_t i) const { return tensors_[i]; }

    void zero_grads() {
        for (Tensor& t : tensors_) t.zero_grad();
    }

    std::size_t total_elements() const {
        std::size_t n = 0;
        for (const Tensor& t : tensors_) n += t.size();
        return n;
    }

  private:
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace snowshr
