#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "nsp/tensor.hpp"

namespace nsp {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Named parameter tensors with gradient buffers, in insertion order.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor value);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Parameter>& items() { return items_; }
  const std::vector<Parameter>& items() const { return items_; }
  std::size_t scalar_count() const;

  void zero_grad();
  /// value -= rate * grad for every parameter.
  void sgd_step(double rate);
  bool all_finite() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b);

 private:
  std::vector<Parameter> items_;
};

/// Reverse-mode tape over Tensor values. Build the forward pass with the
/// op methods, then call backward() once on a 1x1 output.
class Graph {
 public:
  using Var = std::size_t;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; backward() adds into its grad buffer.
  /// The parameter must outlive the graph and stay unmodified until
  /// backward() has run.
  Var parameter(Parameter& p);

  Var matmul(Var a, Var b);
  /// x (m x n) plus bias (1 x n) broadcast over rows.
  Var add_bias(Var x, Var bias);
  Var add(Var a, Var b);
  Var tanh(Var x);
  Var relu(Var x);
  /// Row-major reshape to 1 x (rows * cols).
  Var flatten(Var x);
  /// Horizontal concatenation of 1 x n row vectors.
  Var concat(const std::vector<Var>& parts);
  Var log_softmax(Var z);
  /// Element i of a row vector as a 1 x 1 value.
  Var pick(Var x, std::size_t index);
  Var scale(Var x, double factor);
  Var square(Var x);
  Var sum(const std::vector<Var>& scalars);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  void backward(Var output);

 private:
  struct Node {
    Tensor own_value;
    Tensor own_grad;
    // Parameter leaves read and accumulate in place.
    const Tensor* value_ref = nullptr;
    Tensor* grad_ref = nullptr;
    std::function<void(Graph&)> propagate;

    const Tensor& value() const { return value_ref ? *value_ref : own_value; }
    Tensor& grad() { return grad_ref ? *grad_ref : own_grad; }
    const Tensor& grad() const { return grad_ref ? *grad_ref : own_grad; }
  };

  Var push(Tensor value, std::function<void(Graph&)> propagate = {});
  Node& node(Var v);
  const Node& node(Var v) const;
  Tensor& grad_of(Var v);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace nsp
