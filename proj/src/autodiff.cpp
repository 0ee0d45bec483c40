#include "nsp/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "nsp/errors.hpp"

namespace nsp {

Parameter& ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) throw ContractViolation("duplicate parameter " + name);
  Tensor grad(value.rows(), value.cols());
  items_.push_back({std::move(name), std::move(value), std::move(grad)});
  return items_.back();
}

Parameter& ParameterSet::at(const std::string& name) {
  for (auto& p : items_) {
    if (p.name == name) return p;
  }
  throw LookupError("unknown parameter " + name);
}

const Parameter& ParameterSet::at(const std::string& name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(items_.begin(), items_.end(),
                     [&](const Parameter& p) { return p.name == name; });
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : items_) p.grad.fill(0.0);
}

void ParameterSet::sgd_step(double rate) {
  for (auto& p : items_) {
    auto v = p.value.values();
    auto g = p.grad.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= rate * g[i];
  }
}

bool ParameterSet::all_finite() const {
  return std::all_of(items_.begin(), items_.end(),
                     [](const Parameter& p) { return p.value.all_finite(); });
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  if (a.items_.size() != b.items_.size()) return false;
  for (std::size_t i = 0; i < a.items_.size(); ++i) {
    if (a.items_[i].name != b.items_[i].name ||
        !(a.items_[i].value == b.items_[i].value)) {
      return false;
    }
  }
  return true;
}

Graph::Var Graph::push(Tensor value, std::function<void(Graph&)> propagate) {
  Node n;
  n.own_grad = Tensor(value.rows(), value.cols());
  n.own_value = std::move(value);
  n.propagate = std::move(propagate);
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

Graph::Node& Graph::node(Var v) {
  if (v >= nodes_.size()) throw ContractViolation("unknown graph variable");
  return nodes_[v];
}

const Graph::Node& Graph::node(Var v) const {
  if (v >= nodes_.size()) throw ContractViolation("unknown graph variable");
  return nodes_[v];
}

Tensor& Graph::grad_of(Var v) { return nodes_[v].grad(); }

const Tensor& Graph::value(Var v) const { return node(v).value(); }
const Tensor& Graph::grad(Var v) const { return node(v).grad(); }

Graph::Var Graph::constant(Tensor value) { return push(std::move(value)); }

Graph::Var Graph::parameter(Parameter& p) {
  Node n;
  n.value_ref = &p.value;
  n.grad_ref = &p.grad;
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

Graph::Var Graph::matmul(Var a, Var b) {
  Tensor out = nsp::matmul(value(a), value(b));
  Var self = nodes_.size();
  return push(std::move(out), [a, b, self](Graph& g) {
    const Tensor& up = g.grad_of(self);
    const Tensor da = matmul_nt(up, g.value(b));
    const Tensor db = matmul_tn(g.value(a), up);
    auto ga = g.grad_of(a).values();
    auto gb = g.grad_of(b).values();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += da[i];
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += db[i];
  });
}

Graph::Var Graph::add_bias(Var x, Var bias) {
  const Tensor& xv = value(x);
  const Tensor& bv = value(bias);
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw ContractViolation("bias shape mismatch");
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv(0, c);
  Var self = nodes_.size();
  return push(std::move(out), [x, bias, self](Graph& g) {
    const Tensor& up = g.grad_of(self);
    Tensor& gx = g.grad_of(x);
    Tensor& gb = g.grad_of(bias);
    for (std::size_t r = 0; r < up.rows(); ++r) {
      for (std::size_t c = 0; c < up.cols(); ++c) {
        gx(r, c) += up(r, c);
        gb(0, c) += up(r, c);
      }
    }
  });
}

Graph::Var Graph::add(Var a, Var b) {
  if (!value(a).same_shape(value(b))) throw ContractViolation("add shape mismatch");
  Tensor out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += value(b)[i];
  Var self = nodes_.size();
  return push(std::move(out), [a, b, self](Graph& g) {
    const Tensor& up = g.grad_of(self);
    for (std::size_t i = 0; i < up.size(); ++i) {
      g.grad_of(a)[i] += up[i];
      g.grad_of(b)[i] += up[i];
    }
  });
}

Graph::Var Graph::tanh(Var x) {
  Tensor out = value(x);
  for (double& v : out.values()) v = std::tanh(v);
  Var self = nodes_.size();
  return push(std::move(out), [x, self](Graph& g) {
    const Tensor& up = g.grad_of(self);
    const Tensor& y = g.value(self);
    for (std::size_t i = 0; i < up.size(); ++i) {
      g.grad_of(x)[i] += up[i] * (1.0 - y[i] * y[i]);
    }
  });
}

Graph::Var Graph::relu(Var x) {
  Tensor out = value(x);
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  Var self = nodes_.size();
  return push(std::move(out), [x, self](Graph& g) {
    const Tensor& up = g.grad_of(self);
    const Tensor& in = g.value(x);
    for (std::size_t i = 0; i < up.size(); ++i) {
      if (in[i] > 0.0) g.grad_of(x)[i] += up[i];
    }
  });
}

Graph::Var Graph::flatten(Var x) {
  const Tensor& xv = value(x);
  Tensor out(1, xv.size(), xv.raw());
  Var self = nodes_.size();
  return push(std::move(out), [x, self](Graph& g) {
    const Tensor& up = g.grad_of(self);
    for (std::size_t i = 0; i < up.size(); ++i) g.grad_of(x)[i] += up[i];
  });
}

Graph::Var Graph::concat(const std::vector<Var>& parts) {
  std::vector<double> joined;
  for (Var p : parts) {
    if (value(p).rows() != 1) throw ContractViolation("concat expects row vectors");
    const auto v = value(p).values();
    joined.insert(joined.end(), v.begin(), v.end());
  }
  Var self = nodes_.size();
  return push(Tensor::row(std::move(joined)), [parts, self](Graph& g) {
    const Tensor& up = g.grad_of(self);
    std::size_t offset = 0;
    for (Var p : parts) {
      Tensor& gp = g.grad_of(p);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += up[offset + i];
      offset += gp.size();
    }
  });
}

Graph::Var Graph::log_softmax(Var z) {
  const Tensor& zv = value(z);
  if (zv.rows() != 1) throw ContractViolation("log_softmax expects a row vector");
  const auto p = softmax(zv.values());
  Tensor out(1, zv.cols());
  const double peak = *std::max_element(zv.values().begin(), zv.values().end());
  double total = 0.0;
  for (double v : zv.values()) total += std::exp(v - peak);
  const double log_norm = peak + std::log(total);
  for (std::size_t i = 0; i < zv.cols(); ++i) out[i] = zv[i] - log_norm;
  Var self = nodes_.size();
  return push(std::move(out), [z, self, p](Graph& g) {
    const Tensor& up = g.grad_of(self);
    double up_total = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) up_total += up[i];
    for (std::size_t i = 0; i < up.size(); ++i) {
      g.grad_of(z)[i] += up[i] - p[i] * up_total;
    }
  });
}

Graph::Var Graph::pick(Var x, std::size_t index) {
  const Tensor& xv = value(x);
  if (xv.rows() != 1 || index >= xv.cols()) {
    throw ContractViolation("pick index out of range");
  }
  Var self = nodes_.size();
  return push(Tensor(1, 1, xv[index]), [x, index, self](Graph& g) {
    g.grad_of(x)[index] += g.grad_of(self)[0];
  });
}

Graph::Var Graph::scale(Var x, double factor) {
  Tensor out = value(x);
  for (double& v : out.values()) v *= factor;
  Var self = nodes_.size();
  return push(std::move(out), [x, factor, self](Graph& g) {
    const Tensor& up = g.grad_of(self);
    for (std::size_t i = 0; i < up.size(); ++i) g.grad_of(x)[i] += factor * up[i];
  });
}

Graph::Var Graph::square(Var x) {
  Tensor out = value(x);
  for (double& v : out.values()) v *= v;
  Var self = nodes_.size();
  return push(std::move(out), [x, self](Graph& g) {
    const Tensor& up = g.grad_of(self);
    const Tensor& in = g.value(x);
    for (std::size_t i = 0; i < up.size(); ++i) {
      g.grad_of(x)[i] += 2.0 * in[i] * up[i];
    }
  });
}

Graph::Var Graph::sum(const std::vector<Var>& scalars) {
  double total = 0.0;
  for (Var s : scalars) {
    if (value(s).size() != 1) throw ContractViolation("sum expects 1x1 values");
    total += value(s)[0];
  }
  Var self = nodes_.size();
  return push(Tensor(1, 1, total), [scalars, self](Graph& g) {
    const double up = g.grad_of(self)[0];
    for (Var s : scalars) g.grad_of(s)[0] += up;
  });
}

void Graph::backward(Var output) {
  if (nodes_.empty()) throw ContractViolation("backward called before any forward pass");
  if (consumed_) throw ContractViolation("backward already ran on this graph");
  if (value(output).size() != 1) {
    throw ContractViolation("backward needs a scalar output");
  }
  consumed_ = true;
  nodes_[output].grad()[0] += 1.0;
  for (Var v = output + 1; v-- > 0;) {
    auto& n = nodes_[v];
    if (n.propagate) n.propagate(*this);
  }
}

}  // namespace nsp
